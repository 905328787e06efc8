//! Run the reference forwarding simulator under every single-link failure.

use cfgloc::harness::sim::{assignments, delivered, simulate};
use cfgloc::harness::{fixture_dir, load_case};

fn main() {
    let case = load_case(&fixture_dir("triangle_acl")).unwrap();
    let req = &case.requirements[0];
    let tc = req.traffic_class(&case.net.topology);
    let links: Vec<String> = case.net.topology.links.iter().map(|l| l.name()).collect();
    for failed in assignments(links.len(), 1) {
        let down: Vec<&str> = failed.iter().zip(&links).filter(|x| *x.0).map(|x| x.1.as_str()).collect();
        let res = simulate(&case.net, &failed, &tc);
        println!("down={down:?} delivered={} decisions={:?}", delivered(&case.net, &res, &tc), res.decision);
    }
}
