//! Lowering of terms to CNF: Tseitin gates with constant folding and
//! ripple-carry arithmetic over little-endian bit vectors.

use std::collections::HashMap;

use super::sat::{Lit, SatSolver};
use super::term::{Term, TermId, TermStore, VarId};

#[derive(Clone, Debug)]
pub enum Enc {
    Bool(Lit),
    Int(Vec<Lit>),
}

impl Enc {
    pub fn lit(&self) -> Lit {
        match self {
            Enc::Bool(l) => *l,
            Enc::Int(_) => panic!("integer encoding used as a literal"),
        }
    }

    pub fn bits(&self) -> &[Lit] {
        match self {
            Enc::Int(b) => b,
            Enc::Bool(_) => panic!("boolean encoding used as a bit vector"),
        }
    }
}

/// A SAT instance together with a copy of every clause added to it, so that
/// the problem can be written out as DIMACS.
pub struct Cnf {
    pub sat: SatSolver,
    clauses: Vec<Vec<Lit>>,
    true_lit: Lit,
    gates: HashMap<(u8, Vec<Lit>), Lit>,
}

impl Default for Cnf {
    fn default() -> Self {
        Self::new()
    }
}

impl Cnf {
    pub fn new() -> Self {
        let mut sat = SatSolver::new();
        let t = sat.new_var().pos();
        let mut cnf = Cnf {
            sat,
            clauses: Vec::new(),
            true_lit: t,
            gates: HashMap::new(),
        };
        cnf.clause(&[t]);
        cnf
    }

    pub fn tt(&self) -> Lit {
        self.true_lit
    }

    pub fn ff(&self) -> Lit {
        !self.true_lit
    }

    pub fn fresh(&mut self) -> Lit {
        self.sat.new_var().pos()
    }

    pub fn clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
        self.sat.add_clause(lits);
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    fn konst(&self, l: Lit) -> Option<bool> {
        if l == self.true_lit {
            Some(true)
        } else if l == !self.true_lit {
            Some(false)
        } else {
            None
        }
    }

    pub fn and(&mut self, xs: &[Lit]) -> Lit {
        let mut lits = Vec::with_capacity(xs.len());
        for &x in xs {
            match self.konst(x) {
                Some(true) => {}
                Some(false) => return self.ff(),
                None => lits.push(x),
            }
        }
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return self.ff();
        }
        match lits.len() {
            0 => return self.tt(),
            1 => return lits[0],
            _ => {}
        }
        if let Some(&g) = self.gates.get(&(0, lits.clone())) {
            return g;
        }
        let g = self.fresh();
        let mut big = Vec::with_capacity(lits.len() + 1);
        for &x in &lits {
            self.clause(&[!g, x]);
            big.push(!x);
        }
        big.push(g);
        self.clause(&big);
        self.gates.insert((0, lits), g);
        g
    }

    pub fn or(&mut self, xs: &[Lit]) -> Lit {
        let neg: Vec<Lit> = xs.iter().map(|&x| !x).collect();
        !self.and(&neg)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => return if x != y { self.tt() } else { self.ff() },
            (Some(false), None) => return b,
            (Some(true), None) => return !b,
            (None, Some(false)) => return a,
            (None, Some(true)) => return !a,
            _ => {}
        }
        if a == b {
            return self.ff();
        }
        if a == !b {
            return self.tt();
        }
        let key = if a < b { vec![a, b] } else { vec![b, a] };
        if let Some(&g) = self.gates.get(&(1, key.clone())) {
            return g;
        }
        let g = self.fresh();
        self.clause(&[!g, a, b]);
        self.clause(&[!g, !a, !b]);
        self.clause(&[g, !a, b]);
        self.clause(&[g, a, !b]);
        self.gates.insert((1, key), g);
        g
    }

    pub fn iff(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    pub fn mux(&mut self, c: Lit, a: Lit, b: Lit) -> Lit {
        match self.konst(c) {
            Some(true) => return a,
            Some(false) => return b,
            None => {}
        }
        if a == b {
            return a;
        }
        if let (Some(x), Some(y)) = (self.konst(a), self.konst(b)) {
            debug_assert!(x != y);
            return if x { c } else { !c };
        }
        let key = vec![c, a, b];
        if let Some(&g) = self.gates.get(&(2, key.clone())) {
            return g;
        }
        let g = self.fresh();
        self.clause(&[!c, !a, g]);
        self.clause(&[!c, a, !g]);
        self.clause(&[c, !b, g]);
        self.clause(&[c, b, !g]);
        self.clause(&[!a, !b, g]);
        self.clause(&[a, b, !g]);
        self.gates.insert((2, key), g);
        g
    }

    fn maj(&mut self, a: Lit, b: Lit, c: Lit) -> Lit {
        let ab = self.and(&[a, b]);
        let ac = self.and(&[a, c]);
        let bc = self.and(&[b, c]);
        self.or(&[ab, ac, bc])
    }

    /// Unsigned `a < b`.
    pub fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        assert_eq!(a.len(), b.len());
        let mut lt = self.ff();
        for i in 0..a.len() {
            let strict = self.and(&[!a[i], b[i]]);
            let same = self.iff(a[i], b[i]);
            let carry = self.and(&[same, lt]);
            lt = self.or(&[strict, carry]);
        }
        lt
    }

    pub fn eq_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        assert_eq!(a.len(), b.len());
        let bits: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.iff(x, y)).collect();
        self.and(&bits)
    }

    /// Ripple-carry sum. The final carry is asserted false, so the sum of a
    /// satisfying assignment never wraps.
    pub fn add(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        assert_eq!(a.len(), b.len());
        let mut carry = self.ff();
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let t = self.xor(a[i], b[i]);
            out.push(self.xor(t, carry));
            carry = self.maj(a[i], b[i], carry);
        }
        let nc = !carry;
        self.clause(&[nc]);
        out
    }

    pub fn const_bits(&self, value: u64, width: u32) -> Vec<Lit> {
        (0..width)
            .map(|i| if (value >> i) & 1 == 1 { self.tt() } else { self.ff() })
            .collect()
    }
}

/// Memoised lowering of terms into a [`Cnf`].
#[derive(Default)]
pub struct BitBlaster {
    cache: HashMap<TermId, Enc>,
    var_enc: HashMap<VarId, Enc>,
}

impl BitBlaster {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_encoding(&self, v: VarId) -> Option<&Enc> {
        self.var_enc.get(&v)
    }

    pub fn lower(&mut self, store: &TermStore, cnf: &mut Cnf, root: TermId) -> Enc {
        if let Some(e) = self.cache.get(&root) {
            return e.clone();
        }
        // Post-order walk so deep terms do not recurse on the call stack.
        let mut stack = vec![(root, false)];
        while let Some((t, expanded)) = stack.pop() {
            if self.cache.contains_key(&t) {
                continue;
            }
            if !expanded {
                stack.push((t, true));
                for c in store.children(t) {
                    if !self.cache.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let enc = self.lower_node(store, cnf, t);
            self.cache.insert(t, enc);
        }
        self.cache[&root].clone()
    }

    fn lit(&self, t: TermId) -> Lit {
        self.cache[&t].lit()
    }

    fn bits(&self, t: TermId) -> Vec<Lit> {
        self.cache[&t].bits().to_vec()
    }

    fn lower_node(&mut self, store: &TermStore, cnf: &mut Cnf, t: TermId) -> Enc {
        match store.get(t) {
            Term::BoolConst(b) => Enc::Bool(if *b { cnf.tt() } else { cnf.ff() }),
            Term::BoolVar(v) => {
                let e = Enc::Bool(cnf.fresh());
                self.var_enc.insert(*v, e.clone());
                e
            }
            Term::IntConst { value, width } => Enc::Int(cnf.const_bits(*value, *width)),
            Term::IntVar(v) => {
                let w = store.width(t);
                let e = Enc::Int((0..w).map(|_| cnf.fresh()).collect());
                self.var_enc.insert(*v, e.clone());
                e
            }
            Term::Not(a) => Enc::Bool(!self.lit(*a)),
            Term::And(xs) => {
                let ls: Vec<Lit> = xs.iter().map(|&x| self.lit(x)).collect();
                Enc::Bool(cnf.and(&ls))
            }
            Term::Or(xs) => {
                let ls: Vec<Lit> = xs.iter().map(|&x| self.lit(x)).collect();
                Enc::Bool(cnf.or(&ls))
            }
            Term::Implies(a, b) => {
                let (a, b) = (self.lit(*a), self.lit(*b));
                Enc::Bool(cnf.or(&[!a, b]))
            }
            Term::Iff(a, b) => {
                let (a, b) = (self.lit(*a), self.lit(*b));
                Enc::Bool(cnf.iff(a, b))
            }
            Term::Eq(a, b) => {
                let (a, b) = (self.bits(*a), self.bits(*b));
                Enc::Bool(cnf.eq_bits(&a, &b))
            }
            Term::Ult(a, b) => {
                let (a, b) = (self.bits(*a), self.bits(*b));
                Enc::Bool(cnf.ult(&a, &b))
            }
            Term::Ule(a, b) => {
                let (a, b) = (self.bits(*a), self.bits(*b));
                Enc::Bool(!cnf.ult(&b, &a))
            }
            Term::AddConst(a, k) => {
                let a = self.bits(*a);
                let kb = cnf.const_bits(*k, a.len() as u32);
                Enc::Int(cnf.add(&a, &kb))
            }
            Term::Add(a, b) => {
                let (a, b) = (self.bits(*a), self.bits(*b));
                Enc::Int(cnf.add(&a, &b))
            }
            Term::Ite(c, a, b) => {
                let c = self.lit(*c);
                match (&self.cache[a], &self.cache[b]) {
                    (Enc::Bool(x), Enc::Bool(y)) => Enc::Bool(cnf.mux(c, *x, *y)),
                    (Enc::Int(x), Enc::Int(y)) => {
                        let (x, y) = (x.clone(), y.clone());
                        Enc::Int(x.iter().zip(&y).map(|(&p, &q)| cnf.mux(c, p, q)).collect())
                    }
                    _ => unreachable!("ite branches checked at construction"),
                }
            }
        }
    }
}
