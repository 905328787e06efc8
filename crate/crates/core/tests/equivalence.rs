mod common;

use cfgloc::harness::{fixture_dir, load_case};

fn check_fixture(name: &str) {
    let case = load_case(&fixture_dir(name)).unwrap();
    common::compare_with_simulator(name, &case).unwrap();
}

#[test]
fn static_chain_matches_simulator() {
    check_fixture("static_chain");
}

#[test]
fn triangle_acl_matches_simulator() {
    check_fixture("triangle_acl");
}

#[test]
fn triangle_no_adj_matches_simulator() {
    check_fixture("triangle_no_adj");
}

#[test]
fn triangle_inbound_acl_matches_simulator() {
    check_fixture("triangle_inbound_acl");
}

#[test]
fn bgp_pair_matches_simulator() {
    check_fixture("bgp_pair");
}

#[test]
fn campus_matches_simulator() {
    check_fixture("campus");
    check_fixture("campus_errors");
}
