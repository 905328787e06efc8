//! Precision and recall of a report against injected ground truth.

use std::collections::BTreeSet;

use super::inject::TruthItem;
use crate::encoder::ConfigKey;
use crate::report::{Report, Segment};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    /// `None` when nothing was reported.
    pub precision: Option<f64>,
    pub recall: f64,
}

fn hits(seg: &Segment, t: &TruthItem) -> bool {
    t.keys.contains(&seg.key) || seg.spans.iter().any(|s| t.spans.iter().any(|u| s.overlaps(u)))
}

/// Precision counts distinct reported segments that touch some truth item;
/// recall counts truth items touched by some reported segment.
pub fn score(report: &Report, truth: &[TruthItem]) -> Score {
    let mut seen: BTreeSet<&ConfigKey> = BTreeSet::new();
    let segs: Vec<&Segment> = report
        .findings
        .iter()
        .flat_map(|f| f.segments.iter())
        .filter(|s| seen.insert(&s.key))
        .collect();
    let precision = (!segs.is_empty()).then(|| {
        let good = segs.iter().filter(|s| truth.iter().any(|t| hits(s, t))).count();
        good as f64 / segs.len() as f64
    });
    let found = truth.iter().filter(|t| segs.iter().any(|s| hits(s, t))).count();
    let recall = if truth.is_empty() { 1.0 } else { found as f64 / truth.len() as f64 };
    Score { precision, recall }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::ConfigKind;
    use crate::netmodel::Span;
    use crate::report::{Finding, RankMode};

    fn seg(router: &str, line: usize) -> Segment {
        Segment {
            key: ConfigKey {
                kind: ConfigKind::AclDef,
                router: router.into(),
                site: "f".into(),
            },
            spans: vec![Span::line(&format!("{router}.cfg"), line)],
            omissions: vec![],
        }
    }

    fn report(segs: Vec<Segment>) -> Report {
        Report {
            mode: RankMode::All,
            requirements: vec![],
            findings: segs
                .into_iter()
                .map(|s| Finding {
                    rank: 1,
                    segments: vec![s],
                    requirements: vec![],
                    scenarios: vec![],
                })
                .collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn one_of_two_replicas() {
        let truth = vec![
            TruthItem {
                keys: vec![seg("a", 1).key],
                spans: vec![],
            },
            TruthItem {
                keys: vec![],
                spans: vec![Span::line("b.cfg", 3)],
            },
        ];
        let s = score(&report(vec![seg("a", 9)]), &truth);
        assert_eq!((s.precision, s.recall), (Some(1.0), 0.5));
        let s = score(&report(vec![seg("a", 9), seg("b", 3), seg("c", 1), seg("d", 1)]), &truth);
        assert_eq!((s.precision, s.recall), (Some(0.5), 1.0));
        assert_eq!(score(&report(vec![]), &truth).precision, None);
    }
}
