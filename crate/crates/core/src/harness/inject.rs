//! Seeded injection of configuration errors, with the ground truth needed to
//! score a localization run.

use std::fmt;
use std::str::FromStr;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use super::sim::{assignments, satisfied, simulate, Decision};
use crate::encoder::{ConfigKey, ConfigKind};
use crate::netmodel::config::{AclApply, AclDef, AclRule};
use crate::netmodel::{Action, Direction, Network, Prefix, Span};
use crate::requirements::{Kind, Requirement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ErrorType {
    OmitNw,
    OmitNb,
    OmitAcl,
    OmitAclRule,
    ExtraAcl,
    ModCost,
}

impl ErrorType {
    pub const ALL: [ErrorType; 6] = [
        ErrorType::OmitNw,
        ErrorType::OmitNb,
        ErrorType::OmitAcl,
        ErrorType::OmitAclRule,
        ErrorType::ExtraAcl,
        ErrorType::ModCost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::OmitNw => "OmitNw",
            ErrorType::OmitNb => "OmitNb",
            ErrorType::OmitAcl => "OmitAcl",
            ErrorType::OmitAclRule => "OmitAclRule",
            ErrorType::ExtraAcl => "ExtraAcl",
            ErrorType::ModCost => "ModCost",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown error type `{s}`"))
    }
}

/// One injected configuration segment. A reported segment matches it when
/// the keys agree or the spans overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruthItem {
    pub keys: Vec<ConfigKey>,
    pub spans: Vec<Span>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Injected {
    #[serde(skip)]
    pub net: Network,
    #[serde(rename = "type")]
    pub kind: ErrorType,
    pub seed: u64,
    pub description: String,
    pub truth: Vec<TruthItem>,
}

#[derive(Debug, thiserror::Error)]
pub enum InjectError {
    #[error("no place to inject {0} that violates a requirement")]
    NoCandidate(ErrorType),
}

fn key(kind: ConfigKind, router: &str, site: impl Into<String>) -> ConfigKey {
    ConfigKey {
        kind,
        router: router.to_string(),
        site: site.into(),
    }
}

fn nowhere() -> Span {
    Span::line("", 0)
}

fn use_kind(d: Direction) -> ConfigKind {
    match d {
        Direction::In => ConfigKind::AclUseIn,
        Direction::Out => ConfigKind::AclUseOut,
    }
}

/// Whether some requirement fails under some assignment within its budget.
pub fn violates(net: &Network, reqs: &[Requirement]) -> bool {
    let links = net.topology.links.len();
    reqs.iter()
        .any(|r| assignments(links, r.max_failures).iter().any(|f| !satisfied(net, r, f)))
}

/// A candidate edit: applies itself to a copy of the network and describes
/// what it did. Truth spans are filled in after reprinting.
struct Edit {
    description: String,
    apply: Box<dyn Fn(&mut Network)>,
    truth: Vec<TruthItem>,
    /// (router, locator) pairs whose printed spans become truth spans.
    added: Vec<(String, Added)>,
}

#[derive(Clone)]
enum Added {
    Passive(String),
    Cost(String),
    Apply(String, Direction),
    Acl(String),
}

fn locate(net: &Network, r: &str, a: &Added) -> Vec<Span> {
    let c = &net.routers[r];
    match a {
        Added::Passive(i) => c.interface(i).and_then(|x| x.ospf_passive.clone()).into_iter().collect(),
        Added::Cost(i) => c.interface(i).and_then(|x| x.ospf_cost.as_ref().map(|s| s.span.clone())).into_iter().collect(),
        Added::Apply(i, d) => c.interface(i).and_then(|x| x.acl(*d).map(|a| a.span.clone())).into_iter().collect(),
        Added::Acl(n) => c.acls.get(n).map(|d| d.rules.iter().map(|r| r.span.clone()).collect()).unwrap_or_default(),
    }
}

/// Injects one error of type `kind`, chosen with a generator seeded by
/// `seed`. Only edits that make some requirement fail are considered.
pub fn inject(net: &Network, reqs: &[Requirement], kind: ErrorType, seed: u64) -> Result<Injected, InjectError> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut cands = candidates(net, reqs, kind);
    for i in (1..cands.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        cands.swap(i, j);
    }
    for e in cands {
        let mut m = net.clone();
        (e.apply)(&mut m);
        let m = m.reprinted();
        if !violates(&m, reqs) {
            continue;
        }
        let mut truth = e.truth;
        let last = truth.len() - 1;
        for (i, (r, a)) in e.added.iter().enumerate() {
            truth[i.min(last)].spans.extend(locate(&m, r, a));
        }
        return Ok(Injected {
            net: m,
            kind,
            seed,
            description: e.description,
            truth,
        });
    }
    Err(InjectError::NoCandidate(kind))
}

fn candidates(net: &Network, reqs: &[Requirement], kind: ErrorType) -> Vec<Edit> {
    match kind {
        ErrorType::OmitNw => omit_nw(net),
        ErrorType::OmitNb => omit_nb(net),
        ErrorType::OmitAcl => omit_acl(net),
        ErrorType::OmitAclRule => omit_acl_rule(net),
        ErrorType::ExtraAcl => extra_acl(net, reqs),
        ErrorType::ModCost => mod_cost(net),
    }
}

fn link_of<'a>(net: &'a Network, r: &str, iface: &str) -> Option<&'a crate::netmodel::Link> {
    net.topology
        .links
        .iter()
        .find(|l| l.oriented(r).is_some_and(|(e, _)| e.iface == iface))
}

fn omit_nw(net: &Network) -> Vec<Edit> {
    let mut out = Vec::new();
    for (r, c) in &net.routers {
        if let Some(o) = &c.ospf {
            for (idx, n) in o.networks.iter().enumerate() {
                let mut keys = Vec::new();
                for i in c.interfaces.iter().filter(|i| i.prefix().is_some_and(|p| n.value.covers(p))) {
                    keys.push(match link_of(net, r, &i.name) {
                        Some(l) => key(ConfigKind::OspfAdjacency, &l.a.router, l.name()),
                        None => key(ConfigKind::OspfOriginate, r, i.prefix().unwrap().to_string()),
                    });
                }
                if keys.is_empty() {
                    continue;
                }
                let rr = r.clone();
                out.push(Edit {
                    description: format!("{r}: removed `router ospf` network {}", n.value),
                    apply: Box::new(move |m: &mut Network| {
                        m.routers.get_mut(&rr).unwrap().ospf.as_mut().unwrap().networks.remove(idx);
                    }),
                    truth: vec![TruthItem { keys, spans: vec![] }],
                    added: vec![],
                });
            }
        }
        if let Some(b) = &c.bgp {
            for (idx, n) in b.networks.iter().enumerate() {
                let keys: Vec<ConfigKey> = c
                    .interfaces
                    .iter()
                    .filter(|i| link_of(net, r, &i.name).is_none())
                    .filter_map(|i| i.prefix())
                    .filter(|p| n.value.covers(*p))
                    .map(|p| key(ConfigKind::BgpOriginate, r, p.to_string()))
                    .collect();
                if keys.is_empty() {
                    continue;
                }
                let rr = r.clone();
                out.push(Edit {
                    description: format!("{r}: removed `router bgp` network {}", n.value),
                    apply: Box::new(move |m: &mut Network| {
                        m.routers.get_mut(&rr).unwrap().bgp.as_mut().unwrap().networks.remove(idx);
                    }),
                    truth: vec![TruthItem { keys, spans: vec![] }],
                    added: vec![],
                });
            }
        }
    }
    out
}

fn omit_nb(net: &Network) -> Vec<Edit> {
    let mut out = Vec::new();
    for l in &net.topology.links {
        let (a, b) = (&l.a, &l.b);
        let (ca, cb) = (&net.routers[&a.router], &net.routers[&b.router]);
        let has_nb = |c: &crate::netmodel::RouterConfig, peer: &str| c.bgp.as_ref().is_some_and(|p| p.neighbor(peer).is_some());
        if has_nb(ca, &b.router) && has_nb(cb, &a.router) {
            let (ra, rb) = (a.router.clone(), b.router.clone());
            out.push(Edit {
                description: format!("removed the BGP neighbor statements on {}", l.name()),
                apply: Box::new(move |m: &mut Network| {
                    for (x, y) in [(&ra, &rb), (&rb, &ra)] {
                        m.routers.get_mut(x).unwrap().bgp.as_mut().unwrap().neighbors.retain(|n| &n.peer != y);
                    }
                }),
                truth: vec![TruthItem {
                    keys: vec![key(ConfigKind::BgpAdjacency, &a.router, l.name())],
                    spans: vec![],
                }],
                added: vec![],
            });
        }
        let ospf_on = |c: &crate::netmodel::RouterConfig, i: &str| {
            let iface = c.interface(i);
            let p = iface.and_then(|x| x.prefix());
            c.ospf.as_ref().is_some_and(|o| p.is_some_and(|p| o.covers(p))) && iface.is_some_and(|x| x.ospf_passive.is_none())
        };
        if ospf_on(ca, &a.iface) && ospf_on(cb, &b.iface) {
            let ends = [(a.router.clone(), a.iface.clone()), (b.router.clone(), b.iface.clone())];
            let e2 = ends.clone();
            out.push(Edit {
                description: format!("made both ends of {} OSPF-passive", l.name()),
                apply: Box::new(move |m: &mut Network| {
                    for (r, i) in &e2 {
                        m.routers.get_mut(r).unwrap().interface_mut(i).unwrap().ospf_passive = Some(nowhere());
                    }
                }),
                truth: ends
                    .iter()
                    .map(|(r, i)| TruthItem {
                        keys: vec![key(ConfigKind::OspfPassive, r, i.clone())],
                        spans: vec![],
                    })
                    .collect(),
                added: ends.iter().map(|(r, i)| (r.clone(), Added::Passive(i.clone()))).collect(),
            });
        }
    }
    out
}

fn omit_acl(net: &Network) -> Vec<Edit> {
    let mut out = Vec::new();
    for (r, c) in &net.routers {
        for i in &c.interfaces {
            for d in [Direction::In, Direction::Out] {
                let Some(a) = i.acl(d) else { continue };
                let (rr, ii) = (r.clone(), i.name.clone());
                out.push(Edit {
                    description: format!("{r}: removed `ip access-group {} {}` from {}", a.acl, d.as_str(), i.name),
                    apply: Box::new(move |m: &mut Network| {
                        let x = m.routers.get_mut(&rr).unwrap().interface_mut(&ii).unwrap();
                        match d {
                            Direction::In => x.in_acl = None,
                            Direction::Out => x.out_acl = None,
                        }
                    }),
                    truth: vec![TruthItem {
                        keys: vec![key(use_kind(d), r, i.name.clone())],
                        spans: vec![],
                    }],
                    added: vec![],
                });
            }
        }
    }
    out
}

/// Removes one rule from every router that defines the ACL with that rule.
fn omit_acl_rule(net: &Network) -> Vec<Edit> {
    let mut seen: Vec<(String, Action, Option<Prefix>, Option<Prefix>)> = Vec::new();
    let mut out = Vec::new();
    for c in net.routers.values() {
        for (name, def) in &c.acls {
            if def.rules.len() < 2 {
                continue;
            }
            for rule in &def.rules {
                let sig = (name.clone(), rule.action, rule.src, rule.dst);
                if seen.contains(&sig) {
                    continue;
                }
                seen.push(sig.clone());
                let holders: Vec<String> = net
                    .routers
                    .iter()
                    .filter(|(_, x)| x.acls.get(name).is_some_and(|d| d.rules.len() >= 2 && d.rules.iter().any(|q| same(q, &sig))))
                    .map(|(r, _)| r.clone())
                    .collect();
                let h2 = holders.clone();
                let s2 = sig.clone();
                out.push(Edit {
                    description: format!("removed `{}` from access-list {name} on {}", show_rule(rule), holders.join(", ")),
                    apply: Box::new(move |m: &mut Network| {
                        for r in &h2 {
                            let d = m.routers.get_mut(r).unwrap().acls.get_mut(&s2.0).unwrap();
                            let k = d.rules.iter().position(|q| same(q, &s2)).unwrap();
                            d.rules.remove(k);
                        }
                    }),
                    truth: holders
                        .iter()
                        .map(|r| TruthItem {
                            keys: vec![key(ConfigKind::AclDef, r, name.clone())],
                            spans: vec![],
                        })
                        .collect(),
                    added: vec![],
                });
            }
        }
    }
    out
}

fn same(q: &AclRule, sig: &(String, Action, Option<Prefix>, Option<Prefix>)) -> bool {
    q.action == sig.1 && q.src == sig.2 && q.dst == sig.3
}

fn show_rule(r: &AclRule) -> String {
    let p = |x: Option<Prefix>| x.map_or("any".to_string(), |p| p.to_string());
    format!("{} src {} dst {}", r.action.as_str(), p(r.src), p(r.dst))
}

/// A new deny ACL on an interface carrying a required flow.
fn extra_acl(net: &Network, reqs: &[Requirement]) -> Vec<Edit> {
    let mut slots: Vec<(String, String, Direction, Prefix)> = Vec::new();
    let nolinks = vec![false; net.topology.links.len()];
    for r in reqs.iter().filter(|r| r.kind == Kind::Reachable) {
        let tc = r.traffic_class(&net.topology);
        let res = simulate(net, &nolinks, &tc);
        let mut at = net.topology.subnets[&r.src].attach.router.clone();
        let mut hops = 0;
        while let Some(Decision::Forward(n)) = res.decision.get(&at) {
            if hops > net.routers.len() {
                break;
            }
            hops += 1;
            if let Some(l) = net.topology.links.iter().find(|l| l.touches(&at) && l.touches(n)) {
                let (x, y) = l.oriented(&at).unwrap();
                slots.push((x.router.clone(), x.iface.clone(), Direction::Out, tc.dst));
                slots.push((y.router.clone(), y.iface.clone(), Direction::In, tc.dst));
            }
            at = n.clone();
        }
        let d = &net.topology.subnets[&r.dst].attach;
        slots.push((d.router.clone(), d.iface.clone(), Direction::Out, tc.dst));
    }
    slots.sort();
    slots.dedup();
    slots.retain(|(r, i, d, _)| net.routers[r].interface(i).is_some_and(|x| x.acl(*d).is_none()));
    let mut out = Vec::new();
    for (r, i, d, dst) in slots {
        let c = &net.routers[&r];
        let name = (1..).map(|k| if k == 1 { "extra".to_string() } else { format!("extra{k}") }).find(|n| !c.acls.contains_key(n)).unwrap();
        let (rr, ii, nn) = (r.clone(), i.clone(), name.clone());
        out.push(Edit {
            description: format!("{r}: added access-list {name} denying dst {dst}, applied {} on {i}", d.as_str()),
            apply: Box::new(move |m: &mut Network| {
                let c = m.routers.get_mut(&rr).unwrap();
                let rule = |action, dst| AclRule {
                    action,
                    src: None,
                    dst,
                    span: nowhere(),
                };
                c.acls.insert(
                    nn.clone(),
                    AclDef {
                        name: nn.clone(),
                        rules: vec![rule(Action::Deny, Some(dst)), rule(Action::Permit, None)],
                    },
                );
                let apply = Some(AclApply {
                    acl: nn.clone(),
                    span: nowhere(),
                });
                let x = c.interface_mut(&ii).unwrap();
                match d {
                    Direction::In => x.in_acl = apply,
                    Direction::Out => x.out_acl = apply,
                }
            }),
            truth: vec![TruthItem {
                keys: vec![key(ConfigKind::AclDef, &r, name.clone()), key(use_kind(d), &r, i.clone())],
                spans: vec![],
            }],
            added: vec![(r.clone(), Added::Acl(name)), (r, Added::Apply(i, d))],
        });
    }
    out
}

fn mod_cost(net: &Network) -> Vec<Edit> {
    let mut out = Vec::new();
    for l in &net.topology.links {
        for e in [&l.a, &l.b] {
            let c = &net.routers[&e.router];
            let Some(i) = c.interface(&e.iface) else { continue };
            if c.ospf.is_none() || i.ospf_cost.is_some() {
                continue;
            }
            let (rr, ii) = (e.router.clone(), e.iface.clone());
            out.push(Edit {
                description: format!("{}: set ospf cost 10 on {}", e.router, e.iface),
                apply: Box::new(move |m: &mut Network| {
                    m.routers.get_mut(&rr).unwrap().interface_mut(&ii).unwrap().ospf_cost = Some(crate::netmodel::config::Spanned {
                        value: 10,
                        span: nowhere(),
                    });
                }),
                truth: vec![TruthItem {
                    keys: vec![key(ConfigKind::OspfCost, &e.router, e.iface.clone())],
                    spans: vec![],
                }],
                added: vec![(e.router.clone(), Added::Cost(e.iface.clone()))],
            });
        }
    }
    out
}
