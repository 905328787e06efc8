//! Compiles a network and one requirement into a labeled constraint system.
//!
//! Configuration enters only through configuration variables, each fixed to
//! its configured value (or its default, for plausible but absent statements)
//! by a single `C` constraint. Protocol behaviour, forwarding and failure
//! bookkeeping are `L` constraints; the requirement and its negation are `R`.
//!
//! Semantics shared with [`crate::harness::sim`]:
//!
//! * A link is up iff it is not failed, its layer-3 adjacency holds and both
//!   interfaces are up.
//! * OSPF runs on links whose adjacency holds and neither side is passive.
//!   A router originates the destination if one of its originate sites
//!   contains it (first match in config order) and then exports that prefix
//!   with its interface cost; otherwise it re-exports its best route with
//!   the interface cost added. Imports require the link up.
//! * BGP is the same with path length (originated routes have length 1) and
//!   an outbound filter evaluated on the exported prefix, first match wins,
//!   implicit deny, a rule matching prefixes it contains.
//! * Best route per protocol: lowest metric among valid imports, ties to the
//!   lowest neighbor name. A protocol that originates the destination does not
//!   offer a forwarding route for it.
//! * Overall choice: connected, then static, then BGP, then OSPF. A usable
//!   static needs its link up; several usable statics resolve to the lowest
//!   next-hop name.
//! * A packet moves r -> n iff r selects n and r's outbound ACL toward n and
//!   n's inbound ACL from r both permit it; delivery at the destination router
//!   needs the destination interface's outbound ACL. Reachability is unrolled
//!   to depth equal to the router count.

mod build;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::netmodel::{Diagnostic, LinkId, Network, Span};
use crate::requirements::{Requirement, TrafficClass};
use crate::solver::{Category, Label, LabelId, Model, System, TermId, VarId};

pub use build::encode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConfigKind {
    InterfaceState,
    L3Adjacency,
    OspfAdjacency,
    OspfPassive,
    OspfCost,
    OspfOriginate,
    BgpAdjacency,
    BgpOriginate,
    RouteFilter,
    AclDef,
    AclUseIn,
    AclUseOut,
    StaticRoute,
}

impl fmt::Display for ConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConfigKind::InterfaceState => "InterfaceState",
            ConfigKind::L3Adjacency => "L3Adjacency",
            ConfigKind::OspfAdjacency => "OspfAdjacency",
            ConfigKind::OspfPassive => "OspfPassive",
            ConfigKind::OspfCost => "OspfCost",
            ConfigKind::OspfOriginate => "OspfOriginate",
            ConfigKind::BgpAdjacency => "BgpAdjacency",
            ConfigKind::BgpOriginate => "BgpOriginate",
            ConfigKind::RouteFilter => "RouteFilter",
            ConfigKind::AclDef => "AclDef",
            ConfigKind::AclUseIn => "AclUse(in)",
            ConfigKind::AclUseOut => "AclUse(out)",
            ConfigKind::StaticRoute => "StaticRoute",
        };
        f.write_str(s)
    }
}

/// Identifies a configuration variable independently of any one system, so
/// results from different requirements can be merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConfigKey {
    pub kind: ConfigKind,
    pub router: String,
    pub site: String,
}

impl fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{}", self.kind, self.router, self.site)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Omission {
    pub router: String,
    pub kind: ConfigKind,
    pub site: String,
    pub suggestion: String,
}

#[derive(Clone, Debug)]
pub struct ConfigVar {
    pub key: ConfigKey,
    /// One term for booleans and costs; `[lo, hi]` for prefix-valued kinds.
    pub terms: Vec<TermId>,
    pub binding: TermId,
    pub label: LabelId,
    /// Fully configured, as opposed to (partly) absent and bound to a default.
    pub present: bool,
    pub spans: Vec<Span>,
    pub omissions: Vec<Omission>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Proto {
    Ospf,
    Bgp,
}

/// Route advertisement variables for one directed adjacency. `lo..=hi` is the
/// advertised prefix; `metric` is the OSPF cost or BGP path length.
#[derive(Clone, Copy, Debug)]
pub struct Advertisement {
    pub valid: TermId,
    pub lo: TermId,
    pub hi: TermId,
    pub metric: TermId,
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("network does not validate: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("requirement: {0}")]
    Requirement(#[from] crate::requirements::RequirementError),
}

pub struct ConstraintSystem {
    pub sys: System,
    pub requirement: Requirement,
    pub traffic: TrafficClass,
    pub src_router: String,
    pub dst_router: String,
    pub routers: Vec<String>,
    pub config_vars: Vec<ConfigVar>,
    pub fail_vars: Vec<TermId>,
    pub link_names: Vec<String>,
    pub nh_vars: BTreeMap<(String, String), TermId>,
    pub fwd_vars: BTreeMap<(String, String), TermId>,
    pub local_vars: BTreeMap<String, TermId>,
    pub reach_vars: BTreeMap<String, TermId>,
    pub adverts: BTreeMap<(Proto, String, String), Advertisement>,
    pub dst_var: TermId,
    pub src_var: TermId,
    pub cost_width: u32,
    pub logic_labels: Vec<LabelId>,
    pub req_label: LabelId,
    pub neg_req_label: LabelId,
    by_label: HashMap<LabelId, usize>,
    pins: HashMap<(LinkId, bool), LabelId>,
    config_constants: BTreeSet<u64>,
    logic_constants: BTreeSet<u64>,
}

/// Link failure assignment, indexed by link id.
pub type FailureAssignment = Vec<bool>;

impl ConstraintSystem {
    pub fn config_labels(&self) -> Vec<LabelId> {
        self.config_vars.iter().map(|c| c.label).collect()
    }

    pub fn config_var_of(&self, label: LabelId) -> Option<&ConfigVar> {
        self.by_label.get(&label).map(|&i| &self.config_vars[i])
    }

    pub fn config_var(&self, key: &ConfigKey) -> Option<&ConfigVar> {
        self.config_vars.iter().find(|c| &c.key == key)
    }

    pub fn vars_of_kind(&self, kind: ConfigKind) -> impl Iterator<Item = &ConfigVar> {
        self.config_vars.iter().filter(move |c| c.key.kind == kind)
    }

    /// Labels for `L` and `R`: everything except configuration and pins.
    pub fn hard_labels(&self) -> Vec<LabelId> {
        let mut v = self.logic_labels.clone();
        v.push(self.req_label);
        v
    }

    /// `C`, `L` and the negated requirement: models are violating scenarios.
    pub fn exploration_labels(&self) -> Vec<LabelId> {
        let mut v = self.config_labels();
        v.extend(&self.logic_labels);
        v.push(self.neg_req_label);
        v
    }

    /// `F` labels fixing every link's failure state; created on first use.
    pub fn pin_labels(&mut self, failed: &[bool]) -> Vec<LabelId> {
        assert_eq!(failed.len(), self.fail_vars.len());
        let mut out = Vec::with_capacity(failed.len());
        for (l, &v) in failed.iter().enumerate() {
            if let Some(&id) = self.pins.get(&(l, v)) {
                out.push(id);
                continue;
            }
            let id = self.sys.next_label_id();
            let f = self.fail_vars[l];
            let formula = if v { f } else { self.sys.t().not(f) };
            let meta = format!("failed({}) = {}", self.link_names[l], v);
            self.sys
                .assert_labeled(formula, Label::new(id, Category::FailurePin, meta))
                .expect("fresh label id");
            self.pins.insert((l, v), id);
            out.push(id);
        }
        out
    }

    pub fn failed_links(&self, model: &Model) -> FailureAssignment {
        self.fail_vars.iter().map(|&f| self.sys.eval_bool(model, f)).collect()
    }

    pub fn value(&self, model: &Model, t: TermId) -> u64 {
        self.sys.eval(model, t)
    }

    pub fn holds(&self, model: &Model, t: TermId) -> bool {
        self.sys.eval_bool(model, t)
    }

    /// Next hop chosen by `router` in `model`, if any.
    pub fn next_hop(&self, model: &Model, router: &str) -> Option<String> {
        self.nh_vars
            .iter()
            .find(|((r, _), &t)| r == router && self.holds(model, t))
            .map(|((_, n), _)| n.clone())
    }

    pub fn dump(&self) -> String {
        self.sys.dump()
    }

    /// Checks that configuration constants only occur in `C` constraints and
    /// that every `C` label belongs to exactly one configuration variable.
    pub fn audit_separation(&self) -> Result<(), String> {
        let config_only: BTreeSet<u64> = self
            .config_constants
            .difference(&self.logic_constants)
            .copied()
            .collect();
        let terms = self.sys.terms();
        for l in self.sys.labels() {
            let f = self.sys.formula(l.id).unwrap();
            match l.category {
                Category::Config => {
                    let owners = self.config_vars.iter().filter(|c| c.label == l.id).count();
                    if owners != 1 {
                        return Err(format!("C label {} has {owners} configuration variables", l.id));
                    }
                }
                _ => {
                    let leaked: Vec<u64> = terms
                        .int_constants_of(f)
                        .into_iter()
                        .filter(|c| config_only.contains(c))
                        .collect();
                    if !leaked.is_empty() {
                        return Err(format!("{} label {} ({}) mentions configuration constants {leaked:?}", l.category.letter(), l.id, l.meta));
                    }
                }
            }
        }
        for c in &self.config_vars {
            let mentions = self
                .sys
                .labels()
                .filter(|l| l.category == Category::Config)
                .filter(|l| {
                    let vs = terms.vars_of(self.sys.formula(l.id).unwrap());
                    c.terms.iter().any(|t| vs.contains(&var_of(terms, *t)))
                })
                .map(|l| l.id)
                .collect::<Vec<_>>();
            // An ACL definition is also referenced by the bindings of the
            // interfaces it is applied to.
            let ok = match c.key.kind {
                ConfigKind::AclDef => mentions.contains(&c.label),
                _ => mentions == [c.label],
            };
            if !ok {
                return Err(format!("{} is mentioned by C labels {mentions:?}", c.key));
            }
        }
        Ok(())
    }

    /// Checks that every variable used by any constraint is one of the
    /// recorded symbols.
    pub fn audit_symbols(&self) -> Result<(), String> {
        let terms = self.sys.terms();
        let mut housed: BTreeSet<VarId> = BTreeSet::new();
        let mut add = |t: TermId| {
            housed.insert(var_of(terms, t));
        };
        for c in &self.config_vars {
            c.terms.iter().for_each(|&t| add(t));
        }
        for a in self.adverts.values() {
            [a.valid, a.lo, a.hi, a.metric].into_iter().for_each(&mut add);
        }
        self.fail_vars.iter().for_each(|&t| add(t));
        for m in [&self.nh_vars, &self.fwd_vars] {
            m.values().for_each(|&t| add(t));
        }
        for m in [&self.local_vars, &self.reach_vars] {
            m.values().for_each(|&t| add(t));
        }
        add(self.dst_var);
        add(self.src_var);
        for l in self.sys.labels() {
            for v in terms.vars_of(self.sys.formula(l.id).unwrap()) {
                if !housed.contains(&v) {
                    return Err(format!("variable `{}` in label {} is not a recorded symbol", terms.var_info(v).name, l.id));
                }
            }
        }
        Ok(())
    }
}

fn var_of(terms: &crate::solver::TermStore, t: TermId) -> VarId {
    match terms.get(t) {
        crate::solver::Term::BoolVar(v) | crate::solver::Term::IntVar(v) => *v,
        _ => panic!("symbol {} is not a variable", terms.display(t)),
    }
}

/// Encodes after checking the network validates.
pub fn encode_checked(net: &Network, req: &Requirement) -> Result<ConstraintSystem, EncodeError> {
    let errors: Vec<Diagnostic> = crate::netmodel::validate(net).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(EncodeError::Invalid(errors));
    }
    crate::requirements::check(req, &net.topology)?;
    encode(net, req)
}
