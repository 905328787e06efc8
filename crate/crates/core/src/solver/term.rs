//! Hash-consed terms over booleans and fixed-width unsigned integers.

use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    Int(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    BoolConst(bool),
    BoolVar(VarId),
    IntConst { value: u64, width: u32 },
    IntVar(VarId),
    Not(TermId),
    And(Vec<TermId>),
    Or(Vec<TermId>),
    Implies(TermId, TermId),
    Iff(TermId, TermId),
    Eq(TermId, TermId),
    Ult(TermId, TermId),
    Ule(TermId, TermId),
    /// `a + k`; the sum must stay below `2^width`.
    AddConst(TermId, u64),
    /// `a + b`; the sum must stay below `2^width`.
    Add(TermId, TermId),
    Ite(TermId, TermId, TermId),
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: String,
    pub sort: Sort,
    pub term: TermId,
}

#[derive(Default)]
pub struct TermStore {
    nodes: Vec<Term>,
    sorts: Vec<Sort>,
    index: HashMap<Term, TermId>,
    vars: Vec<VarInfo>,
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl TermStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, t: TermId) -> &Term {
        &self.nodes[t.0 as usize]
    }

    pub fn sort(&self, t: TermId) -> Sort {
        self.sorts[t.0 as usize]
    }

    pub fn width(&self, t: TermId) -> u32 {
        match self.sort(t) {
            Sort::Int(w) => w,
            Sort::Bool => panic!("width of boolean term {}", self.display(t)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn var_info(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0 as usize]
    }

    fn intern(&mut self, term: Term, sort: Sort) -> TermId {
        if let Some(&id) = self.index.get(&term) {
            return id;
        }
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(term.clone());
        self.sorts.push(sort);
        self.index.insert(term, id);
        id
    }

    fn expect_bool(&self, t: TermId) {
        assert_eq!(self.sort(t), Sort::Bool, "expected boolean term: {}", self.display(t));
    }

    fn expect_same_int(&self, a: TermId, b: TermId) -> u32 {
        match (self.sort(a), self.sort(b)) {
            (Sort::Int(x), Sort::Int(y)) if x == y => x,
            _ => panic!(
                "integer operands must share a width: {} vs {}",
                self.display(a),
                self.display(b)
            ),
        }
    }

    fn const_bool(&self, t: TermId) -> Option<bool> {
        match self.get(t) {
            Term::BoolConst(b) => Some(*b),
            _ => None,
        }
    }

    pub fn const_int(&self, t: TermId) -> Option<u64> {
        match self.get(t) {
            Term::IntConst { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn new_bool_var(&mut self, name: impl Into<String>) -> TermId {
        let v = VarId(self.vars.len() as u32);
        let t = self.intern(Term::BoolVar(v), Sort::Bool);
        self.vars.push(VarInfo {
            name: name.into(),
            sort: Sort::Bool,
            term: t,
        });
        t
    }

    pub fn new_int_var(&mut self, name: impl Into<String>, width: u32) -> TermId {
        assert!((1..=64).contains(&width), "unsupported width {width}");
        let v = VarId(self.vars.len() as u32);
        let t = self.intern(Term::IntVar(v), Sort::Int(width));
        self.vars.push(VarInfo {
            name: name.into(),
            sort: Sort::Int(width),
            term: t,
        });
        t
    }

    pub fn bool_const(&mut self, b: bool) -> TermId {
        self.intern(Term::BoolConst(b), Sort::Bool)
    }

    pub fn tt(&mut self) -> TermId {
        self.bool_const(true)
    }

    pub fn ff(&mut self) -> TermId {
        self.bool_const(false)
    }

    pub fn int_const(&mut self, value: u64, width: u32) -> TermId {
        assert!((1..=64).contains(&width), "unsupported width {width}");
        assert!(value <= mask(width), "constant {value} does not fit in {width} bits");
        self.intern(Term::IntConst { value, width }, Sort::Int(width))
    }

    pub fn not(&mut self, a: TermId) -> TermId {
        self.expect_bool(a);
        match self.get(a).clone() {
            Term::BoolConst(b) => self.bool_const(!b),
            Term::Not(x) => x,
            _ => self.intern(Term::Not(a), Sort::Bool),
        }
    }

    pub fn and(&mut self, xs: impl IntoIterator<Item = TermId>) -> TermId {
        let mut out = Vec::new();
        for x in xs {
            self.expect_bool(x);
            match self.const_bool(x) {
                Some(true) => {}
                Some(false) => return self.ff(),
                None => {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
        match out.len() {
            0 => self.tt(),
            1 => out[0],
            _ => self.intern(Term::And(out), Sort::Bool),
        }
    }

    pub fn or(&mut self, xs: impl IntoIterator<Item = TermId>) -> TermId {
        let mut out = Vec::new();
        for x in xs {
            self.expect_bool(x);
            match self.const_bool(x) {
                Some(false) => {}
                Some(true) => return self.tt(),
                None => {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
        match out.len() {
            0 => self.ff(),
            1 => out[0],
            _ => self.intern(Term::Or(out), Sort::Bool),
        }
    }

    pub fn and2(&mut self, a: TermId, b: TermId) -> TermId {
        self.and([a, b])
    }

    pub fn or2(&mut self, a: TermId, b: TermId) -> TermId {
        self.or([a, b])
    }

    pub fn implies(&mut self, a: TermId, b: TermId) -> TermId {
        self.expect_bool(a);
        self.expect_bool(b);
        match (self.const_bool(a), self.const_bool(b)) {
            (Some(false), _) | (_, Some(true)) => self.tt(),
            (Some(true), _) => b,
            (_, Some(false)) => self.not(a),
            _ => self.intern(Term::Implies(a, b), Sort::Bool),
        }
    }

    pub fn iff(&mut self, a: TermId, b: TermId) -> TermId {
        self.expect_bool(a);
        self.expect_bool(b);
        if a == b {
            return self.tt();
        }
        match (self.const_bool(a), self.const_bool(b)) {
            (Some(x), Some(y)) => self.bool_const(x == y),
            (Some(true), None) => b,
            (None, Some(true)) => a,
            (Some(false), None) => self.not(b),
            (None, Some(false)) => self.not(a),
            _ => self.intern(Term::Iff(a, b), Sort::Bool),
        }
    }

    pub fn eq(&mut self, a: TermId, b: TermId) -> TermId {
        self.expect_same_int(a, b);
        if a == b {
            return self.tt();
        }
        if let (Some(x), Some(y)) = (self.const_int(a), self.const_int(b)) {
            return self.bool_const(x == y);
        }
        self.intern(Term::Eq(a, b), Sort::Bool)
    }

    pub fn ult(&mut self, a: TermId, b: TermId) -> TermId {
        self.expect_same_int(a, b);
        if a == b {
            return self.ff();
        }
        if let (Some(x), Some(y)) = (self.const_int(a), self.const_int(b)) {
            return self.bool_const(x < y);
        }
        self.intern(Term::Ult(a, b), Sort::Bool)
    }

    pub fn ule(&mut self, a: TermId, b: TermId) -> TermId {
        self.expect_same_int(a, b);
        if a == b {
            return self.tt();
        }
        if let (Some(x), Some(y)) = (self.const_int(a), self.const_int(b)) {
            return self.bool_const(x <= y);
        }
        self.intern(Term::Ule(a, b), Sort::Bool)
    }

    pub fn add_const(&mut self, a: TermId, k: u64) -> TermId {
        let w = self.width(a);
        if k == 0 {
            return a;
        }
        if let Some(x) = self.const_int(a) {
            let s = x.checked_add(k).filter(|&s| s <= mask(w));
            return self.int_const(s.expect("constant addition overflows its width"), w);
        }
        self.intern(Term::AddConst(a, k), Sort::Int(w))
    }

    pub fn add(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.expect_same_int(a, b);
        match (self.const_int(a), self.const_int(b)) {
            (Some(_), Some(_)) | (None, Some(_)) => {
                let k = self.const_int(b).unwrap();
                self.add_const(a, k)
            }
            (Some(k), None) => self.add_const(b, k),
            _ => self.intern(Term::Add(a, b), Sort::Int(w)),
        }
    }

    pub fn ite(&mut self, c: TermId, t: TermId, e: TermId) -> TermId {
        self.expect_bool(c);
        let sort = self.sort(t);
        assert_eq!(sort, self.sort(e), "ite branches must share a sort");
        if t == e {
            return t;
        }
        match self.const_bool(c) {
            Some(true) => t,
            Some(false) => e,
            None => {
                if sort == Sort::Bool {
                    match (self.const_bool(t), self.const_bool(e)) {
                        (Some(true), Some(false)) => return c,
                        (Some(false), Some(true)) => return self.not(c),
                        _ => {}
                    }
                }
                self.intern(Term::Ite(c, t, e), sort)
            }
        }
    }

    /// `lo <= x <= hi` for unsigned integers of equal width.
    pub fn in_range(&mut self, x: TermId, lo: TermId, hi: TermId) -> TermId {
        let a = self.ule(lo, x);
        let b = self.ule(x, hi);
        self.and2(a, b)
    }

    pub fn children(&self, t: TermId) -> Vec<TermId> {
        match self.get(t) {
            Term::BoolConst(_) | Term::BoolVar(_) | Term::IntConst { .. } | Term::IntVar(_) => vec![],
            Term::Not(a) | Term::AddConst(a, _) => vec![*a],
            Term::And(xs) | Term::Or(xs) => xs.clone(),
            Term::Implies(a, b)
            | Term::Iff(a, b)
            | Term::Eq(a, b)
            | Term::Ult(a, b)
            | Term::Ule(a, b)
            | Term::Add(a, b) => vec![*a, *b],
            Term::Ite(c, a, b) => vec![*c, *a, *b],
        }
    }

    /// All sub-terms reachable from `root`, each once, in discovery order.
    pub fn subterms(&self, root: TermId) -> Vec<TermId> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(t) = stack.pop() {
            if !seen.insert(t) {
                continue;
            }
            out.push(t);
            stack.extend(self.children(t));
        }
        out
    }

    pub fn vars_of(&self, root: TermId) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .subterms(root)
            .into_iter()
            .filter_map(|t| match self.get(t) {
                Term::BoolVar(v) | Term::IntVar(v) => Some(*v),
                _ => None,
            })
            .collect();
        vs.sort();
        vs
    }

    /// Integer constants appearing in `root`, including `AddConst` offsets.
    pub fn int_constants_of(&self, root: TermId) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .subterms(root)
            .into_iter()
            .filter_map(|t| match self.get(t) {
                Term::IntConst { value, .. } => Some(*value),
                Term::AddConst(_, k) => Some(*k),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn display(&self, t: TermId) -> String {
        let mut s = String::new();
        self.write_term(t, &mut s);
        s
    }

    fn write_term(&self, t: TermId, s: &mut String) {
        let list = |this: &Self, op: &str, xs: &[TermId], s: &mut String| {
            s.push('(');
            s.push_str(op);
            for x in xs {
                s.push(' ');
                this.write_term(*x, s);
            }
            s.push(')');
        };
        match self.get(t) {
            Term::BoolConst(b) => s.push_str(if *b { "true" } else { "false" }),
            Term::BoolVar(v) | Term::IntVar(v) => s.push_str(&self.vars[v.0 as usize].name),
            Term::IntConst { value, width } => {
                let _ = write!(s, "{value}:{width}");
            }
            Term::Not(a) => list(self, "not", &[*a], s),
            Term::And(xs) => list(self, "and", xs, s),
            Term::Or(xs) => list(self, "or", xs, s),
            Term::Implies(a, b) => list(self, "=>", &[*a, *b], s),
            Term::Iff(a, b) => list(self, "<=>", &[*a, *b], s),
            Term::Eq(a, b) => list(self, "=", &[*a, *b], s),
            Term::Ult(a, b) => list(self, "<", &[*a, *b], s),
            Term::Ule(a, b) => list(self, "<=", &[*a, *b], s),
            Term::AddConst(a, k) => {
                s.push_str("(+ ");
                self.write_term(*a, s);
                let _ = write!(s, " {k})");
            }
            Term::Add(a, b) => list(self, "+", &[*a, *b], s),
            Term::Ite(c, a, b) => list(self, "ite", &[*c, *a, *b], s),
        }
    }

    /// Evaluates `t` under an assignment of variable values (booleans as 0/1).
    pub fn eval(&self, t: TermId, value_of: &dyn Fn(VarId) -> u64) -> u64 {
        let b = |x: bool| u64::from(x);
        match self.get(t) {
            Term::BoolConst(x) => b(*x),
            Term::BoolVar(v) | Term::IntVar(v) => value_of(*v),
            Term::IntConst { value, .. } => *value,
            Term::Not(a) => b(self.eval(*a, value_of) == 0),
            Term::And(xs) => b(xs.iter().all(|&x| self.eval(x, value_of) != 0)),
            Term::Or(xs) => b(xs.iter().any(|&x| self.eval(x, value_of) != 0)),
            Term::Implies(x, y) => b(self.eval(*x, value_of) == 0 || self.eval(*y, value_of) != 0),
            Term::Iff(x, y) => b((self.eval(*x, value_of) != 0) == (self.eval(*y, value_of) != 0)),
            Term::Eq(x, y) => b(self.eval(*x, value_of) == self.eval(*y, value_of)),
            Term::Ult(x, y) => b(self.eval(*x, value_of) < self.eval(*y, value_of)),
            Term::Ule(x, y) => b(self.eval(*x, value_of) <= self.eval(*y, value_of)),
            Term::AddConst(x, k) => self.eval(*x, value_of).wrapping_add(*k) & mask(self.width(t)),
            Term::Add(x, y) => {
                self.eval(*x, value_of).wrapping_add(self.eval(*y, value_of)) & mask(self.width(t))
            }
            Term::Ite(c, x, y) => {
                if self.eval(*c, value_of) != 0 {
                    self.eval(*x, value_of)
                } else {
                    self.eval(*y, value_of)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_shares_nodes() {
        let mut t = TermStore::new();
        let x = t.new_bool_var("x");
        let y = t.new_bool_var("y");
        let a = t.and2(x, y);
        let b = t.and2(x, y);
        assert_eq!(a, b);
    }

    #[test]
    fn constant_folding() {
        let mut t = TermStore::new();
        let x = t.new_bool_var("x");
        let f = t.ff();
        assert_eq!(t.and2(x, f), f);
        let nx = t.not(x);
        assert_eq!(t.not(nx), x);
        let two = t.int_const(2, 4);
        let three = t.int_const(3, 4);
        let lt = t.ult(two, three);
        assert_eq!(t.const_bool(lt), Some(true));
    }

    #[test]
    #[should_panic(expected = "share a width")]
    fn mixed_widths_rejected() {
        let mut t = TermStore::new();
        let a = t.new_int_var("a", 4);
        let b = t.new_int_var("b", 5);
        t.eq(a, b);
    }

    #[test]
    fn display_is_readable() {
        let mut t = TermStore::new();
        let x = t.new_int_var("cost", 8);
        let y = t.add_const(x, 1);
        let k = t.int_const(3, 8);
        let e = t.ule(y, k);
        assert_eq!(t.display(e), "(<= (+ cost 1) 3:8)");
    }
}
