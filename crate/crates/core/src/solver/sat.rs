//! Conflict-driven clause-learning SAT solver with assumption support.
//!
//! Two watched literals per clause, first-UIP learning with local clause
//! minimization, VSIDS ordering, phase saving and Luby restarts. Solving under
//! assumptions returns the subset of assumptions involved in the final
//! conflict when the instance is unsatisfiable. The solver is incremental:
//! clauses may be added between calls and learnt clauses are kept.
//!
//! All heuristics are deterministic, so identical call sequences produce
//! identical results.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
    pub fn pos(self) -> Lit {
        Lit(self.0 << 1)
    }
    pub fn neg(self) -> Lit {
        Lit((self.0 << 1) | 1)
    }
    pub fn lit(self, positive: bool) -> Lit {
        if positive {
            self.pos()
        } else {
            self.neg()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub u32);

impl Lit {
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    pub fn index(self) -> usize {
        self.0 as usize
    }
    /// DIMACS integer form (1-based, negative for negated literals).
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0) + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// Conflict budget exhausted before a verdict.
    Unknown,
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;

type ClauseRef = u32;
const NO_REASON: ClauseRef = u32::MAX;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    removed: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: ClauseRef,
    blocker: Lit,
}

/// Max-heap of variables ordered by activity, ties broken by lower index.
#[derive(Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarOrder {
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn grow(&mut self, n: usize) {
        self.pos.resize(n, -1);
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] >= 0
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v as usize] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(act, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            let c = self.heap[child];
            if !Self::better(act, c, v) {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }
}

/// Running counters, mostly for diagnostics and tests.
#[derive(Clone, Copy, Debug, Default)]
pub struct SatStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

pub struct SatSolver {
    clauses: Vec<Clause>,
    learnts: Vec<ClauseRef>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<ClauseRef>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    order: VarOrder,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    core: Vec<Lit>,
    conflict_budget: Option<u64>,
    stats: SatStats,
}

impl Default for SatSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl SatSolver {
    pub fn new() -> Self {
        SatSolver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            order: VarOrder::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            model: Vec::new(),
            core: Vec::new(),
            conflict_budget: None,
            stats: SatStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> SatStats {
        self.stats
    }

    /// Conflicts allowed per `solve` call; `None` means unlimited.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.polarity.push(false);
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow(self.assigns.len());
        self.order.insert(v.0, &self.activity);
        v
    }

    /// False once the clause set is unsatisfiable without assumptions.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var().index()];
        if l.is_neg() {
            -a
        } else {
            a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause. Returns false if the solver became trivially unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let mut ps: Vec<Lit> = lits.to_vec();
        ps.sort();
        ps.dedup();
        let mut out = Vec::with_capacity(ps.len());
        for (i, &l) in ps.iter().enumerate() {
            if i + 1 < ps.len() && ps[i + 1] == !l {
                return true; // tautology
            }
            match self.value(l) {
                TRUE => return true,
                FALSE => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> ClauseRef {
        let cref = self.clauses.len() as ClauseRef;
        self.watches[(!lits[0]).index()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[(!lits[1]).index()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            removed: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: ClauseRef) {
        let v = l.var().index();
        self.assigns[v] = if l.is_neg() { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<ClauseRef> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let mut i = 0;
            let mut j = 0;
            'watch: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].removed {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!lk).index()].push(nw);
                        continue 'watch;
                    }
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            let fresh = std::mem::replace(&mut self.watches[p.index()], ws);
            // watchers pushed for this literal while it was taken out
            self.watches[p.index()].extend(fresh);
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for idx in (lim..self.trail.len()).rev() {
            let l = self.trail[idx];
            let v = l.var();
            self.assigns[v.index()] = UNDEF;
            self.reason[v.index()] = NO_REASON;
            self.polarity[v.index()] = !l.is_neg();
            self.order.insert(v.0, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = self.trail.len();
    }

    fn bump_var(&mut self, v: Var) {
        let a = &mut self.activity[v.index()];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in self.activity.iter_mut() {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v.0, &self.activity);
    }

    fn bump_clause(&mut self, cref: ClauseRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: ClauseRef) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut to_clear = Vec::new();
        loop {
            self.bump_clause(confl);
            let start = if p.is_some() { 1 } else { 0 };
            let lits = self.clauses[confl as usize].lits.clone();
            for &q in &lits[start..] {
                let v = q.var();
                if !self.seen[v.index()] && self.level[v.index()] > 0 {
                    self.seen[v.index()] = true;
                    to_clear.push(v);
                    self.bump_var(v);
                    if self.level[v.index()] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let pl = self.trail[idx];
            p = Some(pl);
            confl = self.reason[pl.var().index()];
            self.seen[pl.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();

        // local minimization: drop literals implied by other literals of the clause
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let r = self.reason[l.var().index()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|&q| {
                    self.seen[q.var().index()] || self.level[q.var().index()] == 0
                });
            if !redundant {
                kept.push(l);
            }
        }
        for v in to_clear {
            self.seen[v.index()] = false;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()]
        };
        (learnt, bt)
    }

    /// Collects the assumptions responsible for `p` being false.
    fn analyze_final(&mut self, p: Lit) {
        self.core.clear();
        self.core.push(p);
        if self.decision_level() == 0 {
            return;
        }
        self.seen[p.var().index()] = true;
        let start = self.trail_lim[0];
        for idx in (start..self.trail.len()).rev() {
            let x = self.trail[idx].var();
            if !self.seen[x.index()] {
                continue;
            }
            let r = self.reason[x.index()];
            if r == NO_REASON {
                if self.level[x.index()] > 0 {
                    self.core.push(!self.trail[idx]);
                }
            } else {
                let lits = self.clauses[r as usize].lits.clone();
                for &q in &lits[1..] {
                    if self.level[q.var().index()] > 0 {
                        self.seen[q.var().index()] = true;
                    }
                }
            }
            self.seen[x.index()] = false;
        }
        self.seen[p.var().index()] = false;
    }

    fn locked(&self, cref: ClauseRef) -> bool {
        let c = &self.clauses[cref as usize];
        let l0 = c.lits[0];
        self.value(l0) == TRUE && self.reason[l0.var().index()] == cref
    }

    fn reduce_db(&mut self) {
        let mut ls: Vec<ClauseRef> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| !self.clauses[c as usize].removed)
            .collect();
        ls.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            let ka = (ca.lits.len() <= 2, ca.activity);
            let kb = (cb.lits.len() <= 2, cb.activity);
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let half = ls.len() / 2;
        let mut keep = Vec::with_capacity(ls.len());
        for (i, &c) in ls.iter().enumerate() {
            let small = self.clauses[c as usize].lits.len() <= 2;
            if i < half && !small && !self.locked(c) {
                let cl = &mut self.clauses[c as usize];
                cl.removed = true;
                cl.lits = Vec::new();
            } else {
                keep.push(c);
            }
        }
        self.learnts = keep;
        let clauses = &self.clauses;
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.cref as usize].removed);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                self.stats.decisions += 1;
                return Some(Var(v).lit(self.polarity[v as usize]));
            }
        }
        None
    }

    fn luby(y: f64, mut x: u64) -> f64 {
        let mut size = 1u64;
        let mut seq = 0u32;
        while size < x + 1 {
            seq += 1;
            size = 2 * size + 1;
        }
        while size - 1 != x {
            size = (size - 1) >> 1;
            seq -= 1;
            x %= size;
        }
        y.powi(seq as i32)
    }

    fn search(&mut self, nof_conflicts: u64, assumptions: &[Lit], budget_left: &mut Option<u64>) -> SolveResult {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if let Some(b) = budget_left.as_mut() {
                    *b = b.saturating_sub(1);
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let l0 = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(l0, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
            } else {
                if conflicts >= nof_conflicts || *budget_left == Some(0) {
                    self.cancel_until(0);
                    return SolveResult::Unknown;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let p = assumptions[self.decision_level() as usize];
                    match self.value(p) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => {
                            self.analyze_final(!p);
                            return SolveResult::Unsat;
                        }
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => match self.pick_branch() {
                        Some(p) => p,
                        None => return SolveResult::Sat,
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    /// Solves under `assumptions`. On `Unsat`, [`SatSolver::failed_assumptions`]
    /// holds the assumptions of the final conflict (empty when the clause set
    /// is unsatisfiable on its own).
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        self.core.clear();
        if !self.ok {
            return SolveResult::Unsat;
        }
        self.cancel_until(0);
        self.max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        let mut budget_left = self.conflict_budget;
        let mut restart = 0u64;
        let result = loop {
            let limit = (Self::luby(2.0, restart) * 100.0) as u64;
            let r = self.search(limit, assumptions, &mut budget_left);
            if r != SolveResult::Unknown {
                break r;
            }
            if budget_left == Some(0) {
                break SolveResult::Unknown;
            }
            restart += 1;
            self.stats.restarts += 1;
            self.max_learnts *= 1.05;
        };
        match result {
            SolveResult::Sat => {
                self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
            }
            SolveResult::Unsat => {
                // `core` holds ¬p for the failing assumption p plus the negations
                // of the other assumptions involved; report assumptions as given.
                let core: Vec<Lit> = self.core.iter().map(|&l| !l).collect();
                self.core = core;
            }
            SolveResult::Unknown => {}
        }
        self.cancel_until(0);
        result
    }

    /// Value of `v` in the last satisfying assignment.
    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v.index()).copied().unwrap_or(false)
    }

    pub fn model_lit(&self, l: Lit) -> bool {
        self.model_value(l.var()) != l.is_neg()
    }

    /// Assumption literals participating in the last unsatisfiable verdict.
    pub fn failed_assumptions(&self) -> &[Lit] {
        &self.core
    }
}

/// One-shot solve of a clause list over `num_vars` variables.
pub fn solve_cnf(num_vars: usize, clauses: &[Vec<Lit>], assumptions: &[Lit]) -> CnfOutcome {
    let mut s = SatSolver::new();
    for _ in 0..num_vars {
        s.new_var();
    }
    for c in clauses {
        s.add_clause(c);
    }
    match s.solve(assumptions) {
        SolveResult::Sat => CnfOutcome::Sat((0..num_vars).map(|v| s.model_value(Var(v as u32))).collect()),
        SolveResult::Unsat => CnfOutcome::Unsat(s.failed_assumptions().to_vec()),
        SolveResult::Unknown => CnfOutcome::Timeout,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CnfOutcome {
    Sat(Vec<bool>),
    Unsat(Vec<Lit>),
    Timeout,
}
