//! Enumerate the link failures that break a requirement and show how
//! assignments with identical forwarding collapse into one class.

use cfgloc::encoder::encode;
use cfgloc::failures::{enumerate_violating_scenarios, ExploreOptions};
use cfgloc::harness::{fixture_dir, load_case};

fn main() {
    let case = load_case(&fixture_dir("triangle_inbound_acl")).unwrap();
    let req = &case.requirements[0];
    for dedup in [false, true] {
        let mut cs = encode(&case.net, req).unwrap();
        let ex = enumerate_violating_scenarios(&mut cs, &ExploreOptions { dedup, deadline: None }).unwrap();
        println!("dedup={dedup}: {} scenario(s) from {} counterexample(s)", ex.scenarios.len(), ex.raw.len());
        for s in &ex.scenarios {
            println!("  #{} failed={:?} members={}", s.id, s.failed_links, s.members.len());
        }
    }
}
