//! Localize the errors in one of the bundled fixtures and print the text report.
//!
//! ```text
//! cargo run --example localize_fixture -- triangle_acl
//! ```

use std::collections::BTreeMap;

use cfgloc::harness::pipeline::{localize, LocalizeOptions};
use cfgloc::harness::{fixture_dir, load_case};
use cfgloc::report::emit_text;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "static_chain".into());
    let dir = fixture_dir(&name);
    let case = load_case(&dir).expect("fixture loads");
    let res = localize(&case.net, &case.requirements, &LocalizeOptions::default()).expect("localization runs");
    let sources: BTreeMap<String, String> = case
        .net
        .routers
        .values()
        .map(|c| (c.file.clone(), std::fs::read_to_string(dir.join("configs").join(&c.file)).unwrap()))
        .collect();
    print!("{}", emit_text(&res.report, &sources));
    println!("solver checks: {}", res.checks());
}
