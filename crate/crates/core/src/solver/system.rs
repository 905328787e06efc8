//! Labeled constraint systems: each formula sits behind an activation
//! literal and is enabled per check by passing its label as an assumption.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use super::bitblast::{BitBlaster, Cnf, Enc};
use super::sat::{Lit, SolveResult};
use super::term::{Sort, TermId, TermStore, VarId};

pub type LabelId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Category {
    Config,
    Logic,
    Requirement,
    FailurePin,
}

impl Category {
    pub fn letter(self) -> char {
        match self {
            Category::Config => 'C',
            Category::Logic => 'L',
            Category::Requirement => 'R',
            Category::FailurePin => 'F',
        }
    }
}

#[derive(Clone, Debug)]
pub struct Label {
    pub id: LabelId,
    pub category: Category,
    pub meta: String,
}

impl Label {
    pub fn new(id: LabelId, category: Category, meta: impl Into<String>) -> Self {
        Label {
            id,
            category,
            meta: meta.into(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("label {0} is already asserted")]
    DuplicateLabel(LabelId),
    #[error("label {0} is not asserted")]
    UnknownLabel(LabelId),
    #[error("labeled formula must be boolean")]
    NotBoolean,
}

/// Handle for a non-label guard literal (used for blocking clauses that must
/// never appear in a core).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Guard(Lit);

#[derive(Clone, Debug)]
pub struct Model {
    values: Vec<u64>,
    truth: HashMap<LabelId, bool>,
}

impl Model {
    pub fn value(&self, v: VarId) -> u64 {
        self.values[v.0 as usize]
    }

    pub fn bool_value(&self, v: VarId) -> bool {
        self.value(v) != 0
    }

    /// Truth value of a labeled formula under this model (whether or not the
    /// label was enabled).
    pub fn label_holds(&self, id: LabelId) -> bool {
        self.truth[&id]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

#[derive(Clone, Debug)]
pub enum CheckResult {
    Sat(Model),
    Unsat(Vec<LabelId>),
    Timeout,
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, CheckResult::Unsat(_))
    }
}

struct Entry {
    label: Label,
    formula: TermId,
    act: Lit,
}

pub struct System {
    terms: TermStore,
    cnf: Cnf,
    bb: BitBlaster,
    entries: Vec<Entry>,
    by_id: HashMap<LabelId, usize>,
    by_act: HashMap<Lit, LabelId>,
    checks: u64,
}

impl Default for System {
    fn default() -> Self {
        Self::new()
    }
}

impl System {
    pub fn new() -> Self {
        System {
            terms: TermStore::new(),
            cnf: Cnf::new(),
            bb: BitBlaster::new(),
            entries: Vec::new(),
            by_id: HashMap::new(),
            by_act: HashMap::new(),
            checks: 0,
        }
    }

    pub fn terms(&self) -> &TermStore {
        &self.terms
    }

    pub fn t(&mut self) -> &mut TermStore {
        &mut self.terms
    }

    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.cnf.sat.set_conflict_budget(budget);
    }

    pub fn assert_labeled(&mut self, formula: TermId, label: Label) -> Result<(), SystemError> {
        if self.terms.sort(formula) != Sort::Bool {
            return Err(SystemError::NotBoolean);
        }
        if self.by_id.contains_key(&label.id) {
            return Err(SystemError::DuplicateLabel(label.id));
        }
        let f = self.bb.lower(&self.terms, &mut self.cnf, formula).lit();
        let act = self.cnf.fresh();
        self.cnf.clause(&[!act, f]);
        self.by_id.insert(label.id, self.entries.len());
        self.by_act.insert(act, label.id);
        self.entries.push(Entry { label, formula, act });
        Ok(())
    }

    pub fn new_guard(&mut self) -> Guard {
        Guard(self.cnf.fresh())
    }

    /// Adds `guard => formula` permanently.
    pub fn add_guarded(&mut self, guard: Guard, formula: TermId) {
        let f = self.bb.lower(&self.terms, &mut self.cnf, formula).lit();
        self.cnf.clause(&[!guard.0, f]);
    }

    pub fn label(&self, id: LabelId) -> Option<&Label> {
        self.by_id.get(&id).map(|&i| &self.entries[i].label)
    }

    pub fn formula(&self, id: LabelId) -> Option<TermId> {
        self.by_id.get(&id).map(|&i| self.entries[i].formula)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.entries.iter().map(|e| &e.label)
    }

    pub fn labels_in(&self, category: Category) -> Vec<LabelId> {
        self.entries
            .iter()
            .filter(|e| e.label.category == category)
            .map(|e| e.label.id)
            .collect()
    }

    pub fn next_label_id(&self) -> LabelId {
        self.entries.iter().map(|e| e.label.id + 1).max().unwrap_or(0)
    }

    pub fn count_checks(&self) -> u64 {
        self.checks
    }

    pub fn check(&mut self, enabled: &[LabelId]) -> Result<CheckResult, SystemError> {
        self.check_with_guards(enabled, &[])
    }

    pub fn check_with_guards(
        &mut self,
        enabled: &[LabelId],
        guards: &[Guard],
    ) -> Result<CheckResult, SystemError> {
        self.checks += 1;
        let mut assumptions = Vec::with_capacity(enabled.len() + guards.len());
        for id in enabled {
            let i = *self.by_id.get(id).ok_or(SystemError::UnknownLabel(*id))?;
            assumptions.push(self.entries[i].act);
        }
        assumptions.extend(guards.iter().map(|g| g.0));
        Ok(match self.cnf.sat.solve(&assumptions) {
            SolveResult::Sat => CheckResult::Sat(self.extract_model()),
            SolveResult::Unsat => {
                let mut core: Vec<LabelId> = self
                    .cnf
                    .sat
                    .failed_assumptions()
                    .iter()
                    .filter_map(|l| self.by_act.get(l).copied())
                    .collect();
                core.sort_unstable();
                core.dedup();
                CheckResult::Unsat(core)
            }
            SolveResult::Unknown => CheckResult::Timeout,
        })
    }

    fn extract_model(&self) -> Model {
        let sat = &self.cnf.sat;
        let values = (0..self.terms.vars().len())
            .map(|i| match self.bb.var_encoding(VarId(i as u32)) {
                None => 0,
                Some(Enc::Bool(l)) => u64::from(sat.model_lit(*l)),
                Some(Enc::Int(bits)) => bits
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| u64::from(sat.model_lit(l)) << k)
                    .sum(),
            })
            .collect::<Vec<_>>();
        let truth = self
            .entries
            .iter()
            .map(|e| (e.label.id, self.terms.eval(e.formula, &|v| values[v.0 as usize]) != 0))
            .collect();
        Model { values, truth }
    }

    pub fn eval(&self, model: &Model, t: TermId) -> u64 {
        self.terms.eval(t, &|v| model.value(v))
    }

    pub fn eval_bool(&self, model: &Model, t: TermId) -> bool {
        self.eval(model, t) != 0
    }

    pub fn num_sat_vars(&self) -> usize {
        self.cnf.sat.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.cnf.clauses().len()
    }

    /// DIMACS CNF text. Activation literals are listed in comment lines so
    /// a label subset can be reproduced with unit clauses.
    pub fn write_dimacs(&self, out: &mut impl fmt::Write) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                out,
                "c label {} {} act {}",
                e.label.id,
                e.label.category.letter(),
                e.act.to_dimacs()
            )?;
        }
        writeln!(out, "p cnf {} {}", self.cnf.sat.num_vars(), self.cnf.clauses().len())?;
        for c in self.cnf.clauses() {
            for l in c {
                write!(out, "{} ", l.to_dimacs())?;
            }
            writeln!(out, "0")?;
        }
        Ok(())
    }

    pub fn dimacs(&self) -> String {
        let mut s = String::new();
        self.write_dimacs(&mut s).expect("writing to a String");
        s
    }

    /// One line per labeled constraint: id, category, formula, meta.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}",
                e.label.id,
                e.label.category.letter(),
                self.terms.display(e.formula),
                e.label.meta
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lbl(id: LabelId) -> Label {
        Label::new(id, Category::Config, format!("c{id}"))
    }

    #[test]
    fn contradiction_under_one_label() {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        let nx = s.t().not(x);
        let f = s.t().and2(x, nx);
        s.assert_labeled(f, lbl(1)).unwrap();
        assert!(s.check(&[1]).unwrap().is_unsat());
    }

    #[test]
    fn two_labels_and_core() {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        let nx = s.t().not(x);
        s.assert_labeled(x, lbl(1)).unwrap();
        s.assert_labeled(nx, lbl(2)).unwrap();
        match s.check(&[1]).unwrap() {
            CheckResult::Sat(m) => assert!(m.bool_value(VarId(0))),
            r => panic!("{r:?}"),
        }
        match s.check(&[1, 2]).unwrap() {
            CheckResult::Unsat(core) => assert!(core.iter().all(|c| [1, 2].contains(c))),
            r => panic!("{r:?}"),
        }
        assert!(s.check(&[]).unwrap().is_sat());
        assert_eq!(s.count_checks(), 3);
    }

    #[test]
    fn duplicate_label_rejected() {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        s.assert_labeled(x, lbl(1)).unwrap();
        assert_eq!(s.assert_labeled(x, lbl(1)), Err(SystemError::DuplicateLabel(1)));
    }

    #[test]
    fn fresh_system_has_no_checks() {
        assert_eq!(System::new().count_checks(), 0);
    }

    #[test]
    fn int_equality_against_all_values() {
        for forced in 0..16u64 {
            let mut s = System::new();
            let x = s.t().new_int_var("x", 4);
            let five = s.t().int_const(5, 4);
            let e = s.t().eq(x, five);
            s.assert_labeled(e, lbl(0)).unwrap();
            let k = s.t().int_const(forced, 4);
            let pin = s.t().eq(x, k);
            s.assert_labeled(pin, lbl(1)).unwrap();
            assert_eq!(s.check(&[0, 1]).unwrap().is_sat(), forced == 5);
        }
    }

    #[test]
    fn constant_true_lowers_to_no_clauses() {
        let mut s = System::new();
        let before = s.num_clauses();
        let t = s.t().tt();
        s.add_guarded(Guard(s.cnf.tt()), t);
        // the guarded form adds one clause; the constant itself adds none
        assert_eq!(s.num_clauses(), before + 1);
        let two = s.t().int_const(2, 4);
        let three = s.t().int_const(3, 4);
        let lt = s.t().ult(two, three);
        s.assert_labeled(lt, lbl(0)).unwrap();
        assert!(s.check(&[0]).unwrap().is_sat());
    }

    #[test]
    fn timeout_still_counts() {
        let mut s = System::new();
        // pigeonhole 6 into 5 is hard enough to exhaust a 1-conflict budget
        let n = 6;
        let h = 5;
        let mut p = vec![vec![]; n];
        for (i, row) in p.iter_mut().enumerate() {
            for j in 0..h {
                row.push(s.t().new_bool_var(format!("p{i}_{j}")));
            }
        }
        let mut cs = Vec::new();
        for row in &p {
            cs.push(s.t().or(row.clone()));
        }
        for j in 0..h {
            for a in 0..n {
                for b in a + 1..n {
                    let na = s.t().not(p[a][j]);
                    let nb = s.t().not(p[b][j]);
                    cs.push(s.t().or2(na, nb));
                }
            }
        }
        let all = s.t().and(cs);
        s.assert_labeled(all, lbl(0)).unwrap();
        s.set_conflict_budget(Some(1));
        assert!(matches!(s.check(&[0]).unwrap(), CheckResult::Timeout));
        assert_eq!(s.count_checks(), 1);
    }

    #[test]
    fn dimacs_header_counts_clauses() {
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        s.assert_labeled(x, lbl(0)).unwrap();
        let d = s.dimacs();
        let header = d.lines().find(|l| l.starts_with("p cnf")).unwrap();
        assert_eq!(header, format!("p cnf {} {}", s.num_sat_vars(), s.num_clauses()));
    }
}
