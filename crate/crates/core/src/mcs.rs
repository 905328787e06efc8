//! Minimal correction sets over the soft (configuration) labels of a system
//! whose hard labels must always stay enabled.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::solver::sat::{Lit, SatSolver, SolveResult, Var};
use crate::solver::{CheckResult, LabelId, SystemError, System};

#[derive(Debug, thiserror::Error)]
pub enum McsError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("nothing to correct: the system is satisfiable")]
    Satisfiable,
    #[error("the hard constraints alone are unsatisfiable")]
    HardUnsat,
    #[error("solver budget exhausted")]
    Timeout,
}

/// A correction set found for one requirement under one failure scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mcs {
    pub labels: Vec<LabelId>,
    pub requirement: String,
    pub scenario: usize,
}

impl Mcs {
    pub fn size(&self) -> usize {
        self.labels.len()
    }
}

/// A system split into labels that stay enabled and labels that may be
/// dropped.
pub struct Problem<'a> {
    pub sys: &'a mut System,
    pub hard: Vec<LabelId>,
    pub soft: Vec<LabelId>,
}

enum Outcome {
    Sat(BTreeSet<LabelId>),
    Unsat(Vec<LabelId>),
}

impl<'a> Problem<'a> {
    pub fn new(sys: &'a mut System, hard: Vec<LabelId>, soft: Vec<LabelId>) -> Self {
        Problem { sys, hard, soft }
    }

    /// Checks `hard ∪ subset`. A satisfiable result carries the soft labels
    /// that hold in the model; an unsatisfiable one the soft part of the core.
    fn check(&mut self, subset: &[LabelId]) -> Result<Outcome, McsError> {
        let mut labels = self.hard.clone();
        labels.extend_from_slice(subset);
        match self.sys.check(&labels)? {
            CheckResult::Sat(m) => Ok(Outcome::Sat(self.soft.iter().copied().filter(|&l| m.label_holds(l)).collect())),
            CheckResult::Unsat(core) => {
                let soft: BTreeSet<LabelId> = subset.iter().copied().collect();
                Ok(Outcome::Unsat(core.into_iter().filter(|l| soft.contains(l)).collect()))
            }
            CheckResult::Timeout => Err(McsError::Timeout),
        }
    }

    fn is_sat(&mut self, subset: &[LabelId]) -> Result<bool, McsError> {
        Ok(matches!(self.check(subset)?, Outcome::Sat(_)))
    }

    fn precondition(&mut self) -> Result<(), McsError> {
        let all = self.soft.clone();
        if self.is_sat(&all)? {
            return Err(McsError::Satisfiable);
        }
        if !self.is_sat(&[])? {
            return Err(McsError::HardUnsat);
        }
        Ok(())
    }

    fn complement(&self, mss: &[LabelId]) -> Vec<LabelId> {
        let keep: BTreeSet<LabelId> = mss.iter().copied().collect();
        let mut v: Vec<LabelId> = self.soft.iter().copied().filter(|l| !keep.contains(l)).collect();
        v.sort_unstable();
        v
    }

    /// Adds soft labels one at a time, keeping each that stays satisfiable.
    pub fn grow_mss_linear(&mut self) -> Result<Vec<LabelId>, McsError> {
        self.precondition()?;
        let mut mss = Vec::new();
        for c in self.soft.clone() {
            mss.push(c);
            if !self.is_sat(&mss)? {
                mss.pop();
            }
        }
        Ok(self.complement(&mss))
    }

    /// Adds whole groups at once, halving a group only when it cannot be
    /// added in full.
    pub fn grow_mss_bisect(&mut self) -> Result<Vec<LabelId>, McsError> {
        self.precondition()?;
        let mut mss = Vec::new();
        let soft = self.soft.clone();
        // The full group is already known to be unsatisfiable.
        if soft.len() > 1 {
            let (a, b) = soft.split_at(soft.len() / 2);
            self.bisect(a, &mut mss)?;
            self.bisect(b, &mut mss)?;
        }
        Ok(self.complement(&mss))
    }

    fn bisect(&mut self, group: &[LabelId], mss: &mut Vec<LabelId>) -> Result<(), McsError> {
        if group.is_empty() {
            return Ok(());
        }
        let n = mss.len();
        mss.extend_from_slice(group);
        if self.is_sat(mss)? {
            return Ok(());
        }
        mss.truncate(n);
        if group.len() == 1 {
            return Ok(());
        }
        let (a, b) = group.split_at(group.len() / 2);
        self.bisect(a, mss)?;
        self.bisect(b, mss)
    }

    /// Deletion-based shrinking of an unsatisfiable seed, cut down further by
    /// each core the solver returns.
    pub fn shrink_mus(&mut self, seed: &[LabelId]) -> Result<Vec<LabelId>, McsError> {
        let mut todo: Vec<LabelId> = match self.check(seed)? {
            Outcome::Sat(_) => return Err(McsError::Satisfiable),
            Outcome::Unsat(core) => core,
        };
        let mut crit: Vec<LabelId> = Vec::new();
        while let Some(c) = todo.pop() {
            let mut trial = crit.clone();
            trial.extend(&todo);
            match self.check(&trial)? {
                Outcome::Unsat(core) => {
                    let core: BTreeSet<LabelId> = core.into_iter().collect();
                    todo.retain(|l| core.contains(l));
                }
                Outcome::Sat(_) => crit.push(c),
            }
        }
        crit.sort_unstable();
        Ok(crit)
    }

    /// True iff dropping `candidate` makes the system satisfiable and adding
    /// back any single member does not.
    pub fn verify_mcs(&mut self, candidate: &[LabelId]) -> Result<bool, McsError> {
        let rest = self.complement(candidate);
        if !self.is_sat(&rest)? {
            return Ok(false);
        }
        for &c in candidate {
            let mut trial = rest.clone();
            trial.push(c);
            if self.is_sat(&trial)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Enumerates correction sets by exploring the subsets of the soft labels.
    pub fn enumerate_mcses(&mut self, opts: &MarcoOptions) -> Result<Enumeration, McsError> {
        let n = self.soft.len();
        let mut map = SatSolver::new();
        let vars: Vec<Var> = (0..n).map(|_| map.new_var()).collect();
        let mut out = Enumeration {
            mcses: Vec::new(),
            muses: Vec::new(),
            complete: true,
        };
        loop {
            if opts.deadline.is_some_and(|d| Instant::now() >= d) {
                out.complete = false;
                break;
            }
            let Some(seed) = next_seed(&mut map, &vars, opts.maximal_seeds) else {
                break;
            };
            let subset: Vec<LabelId> = seed.iter().map(|&i| self.soft[i]).collect();
            let outcome = match self.check(&subset) {
                Ok(o) => o,
                Err(McsError::Timeout) => {
                    out.complete = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            match outcome {
                Outcome::Sat(holds) => {
                    let mss = if opts.maximal_seeds {
                        subset
                    } else {
                        match self.grow_from(subset, holds, opts.grow) {
                            Ok(m) => m,
                            Err(McsError::Timeout) => {
                                out.complete = false;
                                break;
                            }
                            Err(e) => return Err(e),
                        }
                    };
                    let mcs = self.complement(&mss);
                    let clause: Vec<Lit> = mcs.iter().map(|l| vars[self.index(*l)].pos()).collect();
                    if !mcs.is_empty() {
                        out.mcses.push(mcs);
                    }
                    map.add_clause(&clause);
                }
                Outcome::Unsat(core) => {
                    let mus = match self.shrink_mus(&core) {
                        Ok(m) => m,
                        Err(McsError::Timeout) => {
                            out.complete = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    };
                    let clause: Vec<Lit> = mus.iter().map(|l| vars[self.index(*l)].neg()).collect();
                    out.muses.push(mus);
                    map.add_clause(&clause);
                }
            }
        }
        out.mcses.sort();
        out.muses.sort();
        Ok(out)
    }

    fn index(&self, l: LabelId) -> usize {
        self.soft.iter().position(|&x| x == l).expect("soft label")
    }

    /// Extends a satisfiable subset to an MSS, taking every label the last
    /// model already satisfies for free.
    fn grow_from(&mut self, seed: Vec<LabelId>, holds: BTreeSet<LabelId>, strategy: MssStrategy) -> Result<Vec<LabelId>, McsError> {
        let mut mss: BTreeSet<LabelId> = seed.into_iter().collect();
        mss.extend(holds);
        match strategy {
            MssStrategy::Linear => {
                for c in self.soft.clone() {
                    if mss.contains(&c) {
                        continue;
                    }
                    let mut trial: Vec<LabelId> = mss.iter().copied().collect();
                    trial.push(c);
                    if let Outcome::Sat(h) = self.check(&trial)? {
                        mss.insert(c);
                        mss.extend(h);
                    }
                }
                Ok(mss.into_iter().collect())
            }
            MssStrategy::Bisect => {
                let rest: Vec<LabelId> = self.soft.iter().copied().filter(|l| !mss.contains(l)).collect();
                let mut v: Vec<LabelId> = mss.into_iter().collect();
                self.bisect(&rest, &mut v)?;
                Ok(v)
            }
        }
    }

    /// One correction set by the chosen growth strategy.
    pub fn grow_mss(&mut self, strategy: MssStrategy) -> Result<Vec<LabelId>, McsError> {
        match strategy {
            MssStrategy::Linear => self.grow_mss_linear(),
            MssStrategy::Bisect => self.grow_mss_bisect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MssStrategy {
    Linear,
    #[default]
    Bisect,
}

impl std::str::FromStr for MssStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(MssStrategy::Linear),
            "bisect" => Ok(MssStrategy::Bisect),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MarcoOptions {
    pub deadline: Option<Instant>,
    /// Take maximal unexplored subsets as seeds, lowest index first.
    pub maximal_seeds: bool,
    /// How satisfiable seeds are grown when seeds are not maximal.
    pub grow: MssStrategy,
}

impl Default for MarcoOptions {
    fn default() -> Self {
        MarcoOptions {
            deadline: None,
            maximal_seeds: true,
            grow: MssStrategy::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Enumeration {
    pub mcses: Vec<Vec<LabelId>>,
    pub muses: Vec<Vec<LabelId>>,
    pub complete: bool,
}

/// An unexplored subset, as indices into the soft labels.
fn next_seed(map: &mut SatSolver, vars: &[Var], maximal: bool) -> Option<Vec<usize>> {
    if map.solve(&[]) != SolveResult::Sat {
        return None;
    }
    if !maximal {
        return Some((0..vars.len()).filter(|&i| map.model_value(vars[i])).collect());
    }
    let mut assume: Vec<Lit> = Vec::with_capacity(vars.len());
    for &v in vars {
        assume.push(v.pos());
        if map.solve(&assume) != SolveResult::Sat {
            assume.pop();
            assume.push(v.neg());
        }
    }
    Some(assume.iter().enumerate().filter(|(_, l)| !l.is_neg()).map(|(i, _)| i).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Category, Label};

    /// `x` hard; soft: `¬x`, `¬x ∨ y`, `¬y`, `z`.
    fn small() -> (System, Vec<LabelId>, Vec<LabelId>) {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        let y = s.t().new_bool_var("y");
        let z = s.t().new_bool_var("z");
        s.assert_labeled(x, Label::new(0, Category::Logic, "x")).unwrap();
        let nx = s.t().not(x);
        let ny = s.t().not(y);
        let imp = s.t().or2(nx, y);
        s.assert_labeled(nx, Label::new(1, Category::Config, "a")).unwrap();
        s.assert_labeled(imp, Label::new(2, Category::Config, "b")).unwrap();
        s.assert_labeled(ny, Label::new(3, Category::Config, "c")).unwrap();
        s.assert_labeled(z, Label::new(4, Category::Config, "d")).unwrap();
        (s, vec![0], vec![1, 2, 3, 4])
    }

    #[test]
    fn linear_and_bisect_give_valid_mcses() {
        let (mut s, h, c) = small();
        let mut p = Problem::new(&mut s, h, c);
        let a = p.grow_mss_linear().unwrap();
        assert!(p.verify_mcs(&a).unwrap());
        let b = p.grow_mss_bisect().unwrap();
        assert!(p.verify_mcs(&b).unwrap());
    }

    #[test]
    fn marco_finds_all() {
        let (mut s, h, c) = small();
        let mut p = Problem::new(&mut s, h, c);
        for (maximal_seeds, grow) in [(true, MssStrategy::Bisect), (false, MssStrategy::Linear), (false, MssStrategy::Bisect)] {
            let e = p.enumerate_mcses(&MarcoOptions { deadline: None, maximal_seeds, grow }).unwrap();
            assert!(e.complete);
            assert_eq!(e.mcses, vec![vec![1, 2], vec![1, 3]]);
            assert_eq!(e.muses, vec![vec![1], vec![2, 3]]);
        }
    }

    #[test]
    fn shrink_drops_irrelevant() {
        let (mut s, h, c) = small();
        let mut p = Problem::new(&mut s, h, c);
        assert_eq!(p.shrink_mus(&[2, 3, 4]).unwrap(), vec![2, 3]);
        assert_eq!(p.shrink_mus(&[1]).unwrap(), vec![1]);
        assert!(matches!(p.shrink_mus(&[2, 4]), Err(McsError::Satisfiable)));
    }

    #[test]
    fn verify_rejects_bad_candidates() {
        let (mut s, h, c) = small();
        let mut p = Problem::new(&mut s, h, c);
        assert!(!p.verify_mcs(&[]).unwrap());
        assert!(!p.verify_mcs(&[1, 2, 4]).unwrap());
        assert!(!p.verify_mcs(&[1]).unwrap());
        assert!(p.verify_mcs(&[1, 3]).unwrap());
    }

    #[test]
    fn satisfiable_system_has_nothing_to_correct() {
        let (mut s, h, _) = small();
        let mut p = Problem::new(&mut s, h, vec![2, 4]);
        assert!(matches!(p.grow_mss_linear(), Err(McsError::Satisfiable)));
        let e = p.enumerate_mcses(&MarcoOptions::default()).unwrap();
        assert!(e.complete && e.mcses.is_empty());
    }

    #[test]
    fn bisect_uses_few_checks_for_one_culprit() {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        s.assert_labeled(x, Label::new(0, Category::Logic, "x")).unwrap();
        let mut soft = Vec::new();
        for i in 1..=64u32 {
            let f = if i == 40 {
                s.t().not(x)
            } else {
                let v = s.t().new_bool_var(format!("v{i}"));
                s.t().or2(x, v)
            };
            s.assert_labeled(f, Label::new(i, Category::Config, "")).unwrap();
            soft.push(i);
        }
        let mut p = Problem::new(&mut s, vec![0], soft);
        let before = p.sys.count_checks();
        assert_eq!(p.grow_mss_bisect().unwrap(), vec![40]);
        let bisect = p.sys.count_checks() - before;
        let before = p.sys.count_checks();
        assert_eq!(p.grow_mss_linear().unwrap(), vec![40]);
        let linear = p.sys.count_checks() - before;
        assert!(bisect <= 15, "{bisect}");
        assert!(linear >= 64, "{linear}");
    }
}
