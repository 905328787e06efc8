//! The end-to-end localization run: encode, explore failures, enumerate
//! correction sets, aggregate.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::encoder::{encode_checked, EncodeError};
use crate::failures::{enumerate_violating_scenarios, pin_scenario, Exploration, ExploreOptions, FailureError};
use crate::mcs::{MarcoOptions, Mcs, McsError, MssStrategy, Problem};
use crate::netmodel::Network;
use crate::report::{aggregate_and_rank, Correction, RankMode, Report, RequirementOutcome, ScenarioRef, ScenarioSummary, Segment};
use crate::requirements::Requirement;

#[derive(Clone, Debug)]
pub struct LocalizeOptions {
    /// Replaces every requirement's failure budget (capped at the link count).
    pub max_failures: Option<usize>,
    pub time_budget: Duration,
    pub rank_mode: RankMode,
    pub dedup_scenarios: bool,
    pub strategy: MssStrategy,
    pub maximal_seeds: bool,
    pub parallel: bool,
    pub dump_constraints: bool,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            max_failures: None,
            time_budget: Duration::from_secs(600),
            rank_mode: RankMode::Smallest,
            dedup_scenarios: true,
            strategy: MssStrategy::Bisect,
            maximal_seeds: true,
            parallel: true,
            dump_constraints: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LocalizeError {
    #[error("requirement `{0}`: {1}")]
    Encode(String, EncodeError),
    #[error("requirement `{0}`: {1}")]
    Failure(String, FailureError),
    #[error("requirement `{0}`: {1}")]
    Mcs(String, McsError),
}

/// Everything computed for one requirement.
#[derive(Debug)]
pub struct RequirementRun {
    pub requirement: Requirement,
    pub exploration: Exploration,
    pub mcses: Vec<Mcs>,
    pub corrections: Vec<Correction>,
    pub complete: bool,
    pub checks: u64,
    pub scenario_log: Vec<String>,
    pub dump: Option<String>,
}

#[derive(Debug)]
pub struct LocalizeResult {
    pub report: Report,
    pub runs: Vec<RequirementRun>,
}

impl LocalizeResult {
    pub fn checks(&self) -> u64 {
        self.runs.iter().map(|r| r.checks).sum()
    }

    /// The same correction sets ranked under another mode.
    pub fn rerank(&self, mode: RankMode) -> Report {
        aggregate(&self.runs, mode)
    }
}

fn aggregate(runs: &[RequirementRun], mode: RankMode) -> Report {
    let outcomes = runs
        .iter()
        .map(|r| RequirementOutcome {
            id: r.requirement.id.clone(),
            violated: !r.exploration.scenarios.is_empty(),
            complete: r.complete,
            scenarios: r
                .exploration
                .scenarios
                .iter()
                .map(|s| ScenarioSummary {
                    id: s.id,
                    failed_links: s.failed_links.clone(),
                    members: s.members.len(),
                })
                .collect(),
        })
        .collect();
    let corrections: Vec<Correction> = runs.iter().flat_map(|r| r.corrections.iter().cloned()).collect();
    aggregate_and_rank(&corrections, outcomes, mode)
}

pub fn localize(net: &Network, reqs: &[Requirement], opts: &LocalizeOptions) -> Result<LocalizeResult, LocalizeError> {
    let deadline = Instant::now() + opts.time_budget;
    let links = net.topology.links.len();
    let reqs: Vec<Requirement> = reqs
        .iter()
        .map(|r| match opts.max_failures {
            Some(k) => r.with_max_failures(k.min(links)),
            None => r.clone(),
        })
        .collect();
    let runs: Vec<Result<RequirementRun, LocalizeError>> = if opts.parallel {
        reqs.par_iter().map(|r| run_requirement(net, r, opts, deadline)).collect()
    } else {
        reqs.iter().map(|r| run_requirement(net, r, opts, deadline)).collect()
    };
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(&runs, opts.rank_mode);
    Ok(LocalizeResult { report, runs })
}

fn run_requirement(net: &Network, req: &Requirement, opts: &LocalizeOptions, deadline: Instant) -> Result<RequirementRun, LocalizeError> {
    let id = req.id.clone();
    let mut cs = encode_checked(net, req).map_err(|e| LocalizeError::Encode(id.clone(), e))?;
    let dump = opts.dump_constraints.then(|| cs.dump());
    let explore = ExploreOptions {
        dedup: opts.dedup_scenarios,
        deadline: Some(deadline),
    };
    let exploration = enumerate_violating_scenarios(&mut cs, &explore).map_err(|e| LocalizeError::Failure(id.clone(), e))?;
    let mut complete = exploration.complete;
    let mut mcses = Vec::new();
    let mut corrections = Vec::new();
    for sc in &exploration.scenarios {
        let pinned = pin_scenario(&mut cs, &sc.failed).map_err(|e| LocalizeError::Failure(id.clone(), e))?;
        let mut p = Problem::new(&mut cs.sys, pinned.hard, pinned.soft);
        let marco = MarcoOptions {
            deadline: Some(deadline),
            maximal_seeds: opts.maximal_seeds,
            grow: opts.strategy,
        };
        let e = p.enumerate_mcses(&marco).map_err(|e| LocalizeError::Mcs(id.clone(), e))?;
        complete &= e.complete;
        let mut found = e.mcses;
        if found.is_empty() && !e.complete {
            // Out of time before the first correction set: still report one.
            found.push(p.grow_mss(opts.strategy).map_err(|e| LocalizeError::Mcs(id.clone(), e))?);
        }
        for labels in found {
            if !p.verify_mcs(&labels).map_err(|e| LocalizeError::Mcs(id.clone(), e))? {
                panic!("requirement `{id}`: emitted correction set {labels:?} fails verification");
            }
            mcses.push(Mcs {
                labels,
                requirement: id.clone(),
                scenario: sc.id,
            });
        }
    }
    for m in &mcses {
        let segments = m
            .labels
            .iter()
            .map(|&l| Segment::of(cs.config_var_of(l).expect("correction sets only hold configuration labels")))
            .collect();
        let sc = &exploration.scenarios[m.scenario];
        corrections.push(Correction {
            segments,
            scenario: ScenarioRef {
                requirement: id.clone(),
                id: sc.id,
                failed_links: sc.failed_links.clone(),
            },
        });
    }
    Ok(RequirementRun {
        requirement: req.clone(),
        scenario_log: exploration.log_lines(&cs),
        checks: cs.sys.count_checks(),
        exploration,
        mcses,
        corrections,
        complete,
        dump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::ConfigKind;
    use crate::harness::{fixture_dir, load_case};

    fn run(name: &str, mode: RankMode) -> LocalizeResult {
        let c = load_case(&fixture_dir(name)).unwrap();
        let opts = LocalizeOptions {
            rank_mode: mode,
            ..Default::default()
        };
        localize(&c.net, &c.requirements, &opts).unwrap()
    }

    #[test]
    fn static_chain_smallest_is_the_r1_acl() {
        let r = run("static_chain", RankMode::Smallest).report;
        assert_eq!(r.status(), "violated");
        assert!(!r.findings.is_empty());
        for f in &r.findings {
            assert_eq!(f.mcs_size(), 1);
            let k = f.keys().next().unwrap();
            assert_eq!(k.router, "r1");
            assert!(matches!(k.kind, ConfigKind::AclDef | ConfigKind::AclUseOut), "{k}");
        }
    }

    #[test]
    fn triangle_no_adj_smallest_is_missing_adjacency() {
        let r = run("triangle_no_adj", RankMode::Smallest).report;
        assert_eq!(r.findings.len(), 1);
        let s = &r.findings[0].segments[0];
        assert_eq!(s.key.kind, ConfigKind::OspfAdjacency);
        assert_eq!(s.key.site, "r1-r2");
        assert!(s.spans.is_empty() && s.omissions.len() == 2);
    }

    #[test]
    fn compliant_fixture_reports_nothing() {
        let r = run("bgp_pair", RankMode::All).report;
        assert!(r.compliant() && r.findings.is_empty() && r.complete());
    }
}
