//! Inject a seeded error into the campus network, localize it and score the
//! report against the ground truth.

use cfgloc::harness::inject::{inject, ErrorType};
use cfgloc::harness::pipeline::{localize, LocalizeOptions};
use cfgloc::harness::score::score;
use cfgloc::harness::{fixture_dir, load_case};
use cfgloc::report::RankMode;

fn main() {
    let case = load_case(&fixture_dir("campus")).unwrap();
    for kind in [ErrorType::OmitAcl, ErrorType::OmitAclRule, ErrorType::ExtraAcl] {
        let inj = inject(&case.net, &case.requirements, kind, 0).unwrap();
        let res = localize(&inj.net, &case.requirements, &LocalizeOptions::default()).unwrap();
        println!("{kind}: {}", inj.description);
        for mode in [RankMode::Smallest, RankMode::ThreeSmallest, RankMode::All] {
            let s = score(&res.rerank(mode), &inj.truth);
            println!("  {:<9} precision={:?} recall={:.2}", mode.as_str(), s.precision, s.recall);
        }
    }
}
