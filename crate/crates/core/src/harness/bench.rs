//! Injection benchmarks: generate, inject, localize, score.

use std::fmt::Write as _;
use std::time::Instant;

use super::gen::{gen_topology, Shape};
use super::inject::{inject, ErrorType, InjectError};
use super::pipeline::{localize, LocalizeError, LocalizeOptions};
use super::score::{score, Score};
use super::{Case, CaseError};
use crate::report::RankMode;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Inject(#[from] InjectError),
    #[error(transparent)]
    Localize(#[from] LocalizeError),
}

/// One injected error localized once and scored under several rank modes.
#[derive(Clone, Debug)]
pub struct Trial {
    pub kind: ErrorType,
    pub shape: Shape,
    pub size: usize,
    pub seed: u64,
    pub description: String,
    pub scores: Vec<(RankMode, Score)>,
    pub checks: u64,
    pub wall_ms: u128,
}

impl Trial {
    pub fn score(&self, mode: RankMode) -> Option<Score> {
        self.scores.iter().find(|(m, _)| *m == mode).map(|x| x.1)
    }
}

pub fn run_trial(case: &Case, shape: Shape, size: usize, kind: ErrorType, seed: u64, modes: &[RankMode], opts: &LocalizeOptions) -> Result<Trial, BenchError> {
    let inj = inject(&case.net, &case.requirements, kind, seed)?;
    let t = Instant::now();
    let res = localize(&inj.net, &case.requirements, opts)?;
    let wall_ms = t.elapsed().as_millis();
    let scores = modes.iter().map(|&m| (m, score(&res.rerank(m), &inj.truth))).collect();
    Ok(Trial {
        kind,
        shape,
        size,
        seed,
        description: inj.description,
        scores,
        checks: res.checks(),
        wall_ms,
    })
}

/// The injection suite: OSPF omissions on rings of each size and on a
/// three-level tree, ACL errors on the campus network.
pub fn injection_suite(sizes: &[usize], seeds: u64, modes: &[RankMode], opts: &LocalizeOptions) -> Result<Vec<Trial>, BenchError> {
    let mut plan: Vec<(Shape, usize, ErrorType)> = Vec::new();
    for &n in sizes {
        for k in [ErrorType::OmitNw, ErrorType::OmitNb] {
            plan.push((Shape::Ring, n, k));
        }
    }
    for k in [ErrorType::OmitNw, ErrorType::OmitNb] {
        plan.push((Shape::Tree, 3, k));
    }
    for k in [ErrorType::OmitAcl, ErrorType::OmitAclRule, ErrorType::ExtraAcl] {
        plan.push((Shape::Campus, 0, k));
    }
    let mut out = Vec::new();
    for (shape, size, kind) in plan {
        let case = gen_topology(shape, size)?;
        let size = case.net.routers.len();
        for seed in 0..seeds {
            out.push(run_trial(&case, shape, size, kind, seed, modes, opts)?);
        }
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "errorType,topology,size,seed,rankMode,precision,recall,checks,wallMs";

/// One CSV row per trial and rank mode; an undefined precision is left empty.
pub fn to_csv(trials: &[Trial]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for t in trials {
        for (m, sc) in &t.scores {
            let p = sc.precision.map(|p| format!("{p:.3}")).unwrap_or_default();
            let shape = format!("{:?}", t.shape).to_lowercase();
            let _ = writeln!(s, "{},{shape},{},{},{},{p},{:.3},{},{}", t.kind, t.size, t.seed, m.as_str(), sc.recall, t.checks, t.wall_ms);
        }
    }
    s
}

/// Mean of the defined precisions, or `None` if there are none.
pub fn mean_precision(trials: &[Trial], mode: RankMode) -> Option<f64> {
    let v: Vec<f64> = trials.iter().filter_map(|t| t.score(mode)?.precision).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::ring;

    #[test]
    fn ring_trial_finds_the_omission() {
        let c = ring(5);
        let opts = LocalizeOptions::default();
        let t = run_trial(&c, Shape::Ring, 5, ErrorType::OmitNw, 1, &[RankMode::Smallest, RankMode::All], &opts).unwrap();
        assert_eq!(t.score(RankMode::Smallest).unwrap().recall, 1.0);
        let csv = to_csv(&[t]);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("OmitNw,ring,5,1,smallest,"));
    }
}
