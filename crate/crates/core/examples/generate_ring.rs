//! Print the configurations and requirement count of a generated OSPF ring.

use cfgloc::harness::gen::ring;

fn main() {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let case = ring(n);
    for (file, text) in case.net.to_texts() {
        println!("== {file}\n{text}");
    }
    println!("{} requirements", case.requirements.len());
}
