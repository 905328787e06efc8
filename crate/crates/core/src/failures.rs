//! Counterexample-guided search for the link failures that violate a
//! requirement.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use serde::Serialize;

use crate::encoder::ConstraintSystem;
use crate::solver::{CheckResult, LabelId, Model, SystemError};

/// Forwarding behaviour of one counterexample, rendered canonically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Fingerprint(pub String);

impl Fingerprint {
    pub fn hash64(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FailureScenario {
    pub id: usize,
    /// Representative assignment, indexed by link id.
    pub failed: Vec<bool>,
    #[serde(rename = "failedLinks")]
    pub failed_links: Vec<String>,
    #[serde(skip)]
    pub fingerprint: Fingerprint,
    /// Every violating assignment with this fingerprint, representative first.
    #[serde(skip)]
    pub members: Vec<Vec<bool>>,
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub scenarios: Vec<FailureScenario>,
    /// Every counterexample in discovery order, with its fingerprint.
    pub raw: Vec<(Vec<bool>, Fingerprint)>,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub dedup: bool,
    pub deadline: Option<Instant>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            dedup: true,
            deadline: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FailureError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("pinned scenario {0:?} is satisfiable with the requirement enforced")]
    PinnedSat(Vec<String>),
    #[error("solver budget exhausted while pinning a scenario")]
    Timeout,
}

fn names(cs: &ConstraintSystem, failed: &[bool]) -> Vec<String> {
    failed
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(l, _)| cs.link_names[l].clone())
        .collect()
}

/// Forwarding along the packet's path from the source router: per visited
/// router its next-hop choice, which hops pass the ACLs, delivery and
/// reachability. Routers off the path do not contribute.
pub fn fingerprint(cs: &ConstraintSystem, model: &Model) -> Fingerprint {
    let bits = |v: Vec<bool>| v.into_iter().map(|b| if b { '1' } else { '0' }).collect::<String>();
    let mut out = String::new();
    let mut at = cs.src_router.clone();
    let mut seen = Vec::new();
    loop {
        let nh: Vec<(&String, bool)> = cs
            .nh_vars
            .iter()
            .filter(|((r, _), _)| *r == at)
            .map(|((_, n), &t)| (n, cs.holds(model, t)))
            .collect();
        let fwd: Vec<(&String, bool)> = cs
            .fwd_vars
            .iter()
            .filter(|((r, _), _)| *r == at)
            .map(|((_, n), &t)| (n, cs.holds(model, t)))
            .collect();
        let local = cs.holds(model, cs.local_vars[&at]);
        let reach = cs.holds(model, cs.reach_vars[&at]);
        let _ = write!(
            out,
            "{at}[nh={} fwd={} local={} reach={}]",
            bits(nh.iter().map(|x| x.1).collect()),
            bits(fwd.iter().map(|x| x.1).collect()),
            u8::from(local),
            u8::from(reach)
        );
        seen.push(at.clone());
        match fwd.iter().find(|x| x.1) {
            Some((n, _)) if !seen.contains(n) => at = (*n).clone(),
            _ => break,
        }
    }
    Fingerprint(out)
}

/// Finds every failure assignment within the requirement's budget that
/// violates it. Blocking clauses sit behind a guard, so the system is left as
/// it was for later correction-set search.
pub fn enumerate_violating_scenarios(cs: &mut ConstraintSystem, opts: &ExploreOptions) -> Result<Exploration, FailureError> {
    let labels = cs.exploration_labels();
    let guard = cs.sys.new_guard();
    let mut classes: BTreeMap<Fingerprint, usize> = BTreeMap::new();
    let mut ex = Exploration {
        scenarios: Vec::new(),
        raw: Vec::new(),
        complete: true,
    };
    loop {
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            ex.complete = false;
            break;
        }
        let model = match cs.sys.check_with_guards(&labels, &[guard])? {
            CheckResult::Sat(m) => m,
            CheckResult::Unsat(_) => break,
            CheckResult::Timeout => {
                ex.complete = false;
                break;
            }
        };
        let failed = cs.failed_links(&model);
        let fp = fingerprint(cs, &model);
        ex.raw.push((failed.clone(), fp.clone()));
        let existing = if opts.dedup { classes.get(&fp).copied() } else { None };
        match existing {
            Some(i) => ex.scenarios[i].members.push(failed.clone()),
            None => {
                classes.insert(fp.clone(), ex.scenarios.len());
                ex.scenarios.push(FailureScenario {
                    id: ex.scenarios.len(),
                    failed_links: names(cs, &failed),
                    failed: failed.clone(),
                    fingerprint: fp,
                    members: vec![failed.clone()],
                });
            }
        }
        // Exclude exactly this assignment from further models.
        let diff: Vec<_> = cs
            .fail_vars
            .clone()
            .into_iter()
            .zip(&failed)
            .map(|(v, &f)| if f { cs.sys.t().not(v) } else { v })
            .collect();
        let clause = cs.sys.t().or(diff);
        cs.sys.add_guarded(guard, clause);
    }
    Ok(ex)
}

impl Exploration {
    /// One JSON object per counterexample.
    pub fn log_lines(&self, cs: &ConstraintSystem) -> Vec<String> {
        self.raw
            .iter()
            .map(|(f, fp)| {
                serde_json::json!({
                    "requirement": cs.requirement.id,
                    "failedLinks": names(cs, f),
                    "fingerprint": format!("{:016x}", fp.hash64()),
                })
                .to_string()
            })
            .collect()
    }
}

/// Hard and soft labels of a pinned system: `L`, `R` and the pins are hard,
/// configuration bindings are soft.
#[derive(Clone, Debug)]
pub struct Pinned {
    pub hard: Vec<LabelId>,
    pub soft: Vec<LabelId>,
}

/// Adds the pins for `failed` and confirms that enforcing the requirement is
/// then unsatisfiable.
pub fn pin_scenario(cs: &mut ConstraintSystem, failed: &[bool]) -> Result<Pinned, FailureError> {
    let mut hard = cs.hard_labels();
    hard.extend(cs.pin_labels(failed));
    let soft = cs.config_labels();
    let all: Vec<LabelId> = hard.iter().chain(&soft).copied().collect();
    match cs.sys.check(&all)? {
        CheckResult::Unsat(_) => Ok(Pinned { hard, soft }),
        CheckResult::Sat(_) => Err(FailureError::PinnedSat(names(cs, failed))),
        CheckResult::Timeout => Err(FailureError::Timeout),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode;
    use crate::harness::{fixture_dir, load_case};

    fn explore(name: &str, dedup: bool) -> (ConstraintSystem, Exploration) {
        let case = load_case(&fixture_dir(name)).unwrap();
        let mut cs = encode(&case.net, &case.requirements[0]).unwrap();
        let ex = enumerate_violating_scenarios(&mut cs, &ExploreOptions { dedup, deadline: None }).unwrap();
        (cs, ex)
    }

    #[test]
    fn triangle_acl_has_one_class() {
        let (_, ex) = explore("triangle_acl", true);
        assert!(ex.complete);
        assert_eq!(ex.scenarios.len(), 1);
        assert_eq!(ex.scenarios[0].failed_links, ["r1-r3"]);
    }

    #[test]
    fn acl_on_r3_collapses_to_one_class() {
        let (cs, ex) = explore("triangle_inbound_acl", true);
        assert_eq!(ex.raw.len(), 6);
        let big = ex
            .scenarios
            .iter()
            .find(|s| s.members.contains(&vec![false; 3]))
            .unwrap();
        let mut members: Vec<Vec<String>> = big.members.iter().map(|m| names(&cs, m)).collect();
        members.sort();
        let want: Vec<Vec<String>> = vec![vec![], vec!["r1-r2".into()], vec!["r1-r2".into(), "r2-r3".into()], vec!["r2-r3".into()]];
        assert_eq!(members, want);
    }

    #[test]
    fn compliant_network_has_no_scenarios() {
        let case = load_case(&fixture_dir("bgp_pair")).unwrap();
        for r in &case.requirements {
            let mut cs = encode(&case.net, r).unwrap();
            let ex = enumerate_violating_scenarios(&mut cs, &ExploreOptions::default()).unwrap();
            assert!(ex.scenarios.is_empty() && ex.complete, "{}", r.id);
        }
    }

    #[test]
    fn pinned_scenario_is_unsat_and_blocking_is_gone() {
        let (mut cs, ex) = explore("triangle_no_adj", true);
        let p = pin_scenario(&mut cs, &ex.scenarios[0].failed).unwrap();
        assert!(!p.soft.is_empty());
        // The exploration system is satisfiable again without the guard.
        assert!(cs.sys.check(&cs.exploration_labels()).unwrap().is_sat());
    }

    #[test]
    fn no_dedup_lists_every_assignment() {
        let (_, ex) = explore("triangle_inbound_acl", false);
        assert_eq!(ex.scenarios.len(), ex.raw.len());
    }
}
