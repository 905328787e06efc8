//! Concrete route propagation for one traffic class under fixed link
//! failures. Used as the reference the encoder is checked against, so it is
//! written directly against the parsed configuration rather than sharing code
//! with the encoder.

use std::collections::{BTreeMap, BTreeSet};

use crate::netmodel::config::{Action, FilterRule, RouterConfig};
use crate::netmodel::{LinkId, Network, Prefix, Subnet};
use crate::requirements::{Kind, Requirement, TrafficClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    NoRoute,
    Acl,
    Loop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Deliver,
    Forward(String),
    Drop(DropReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimResult {
    /// Chosen next hop per router; `None` when delivering or without a route.
    pub next_hop: BTreeMap<String, Option<String>>,
    /// Next hop chosen and both ACLs on the hop permit the packet.
    pub fwd: BTreeMap<(String, String), bool>,
    pub local: BTreeMap<String, bool>,
    pub reach: BTreeMap<String, bool>,
    pub decision: BTreeMap<String, Decision>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Route {
    metric: u64,
    prefix: Prefix,
    from: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Proto {
    Ospf,
    Bgp,
}

struct Ctx<'a> {
    net: &'a Network,
    failed: &'a [bool],
    src: u32,
    dst: u32,
}

impl Ctx<'_> {
    fn cfg(&self, r: &str) -> &RouterConfig {
        &self.net.routers[r]
    }

    fn if_up(&self, r: &str, i: &str) -> bool {
        self.cfg(r).interface(i).is_some_and(|x| x.enabled())
    }

    fn link_up(&self, l: LinkId) -> bool {
        let link = &self.net.topology.links[l];
        let pa = self.cfg(&link.a.router).interface(&link.a.iface);
        let pb = self.cfg(&link.b.router).interface(&link.b.iface);
        let l3 = match (pa, pb) {
            (Some(x), Some(y)) => x.prefix().is_some() && x.prefix() == y.prefix() && x.address != y.address,
            _ => false,
        };
        !self.failed[l] && l3 && self.if_up(&link.a.router, &link.a.iface) && self.if_up(&link.b.router, &link.b.iface)
    }

    fn acl_ok(&self, r: &str, i: &str, inbound: bool) -> bool {
        let cfg = self.cfg(r);
        let Some(iface) = cfg.interface(i) else { return true };
        let apply = if inbound { &iface.in_acl } else { &iface.out_acl };
        match apply {
            None => true,
            Some(a) => cfg.acls.get(&a.acl).is_some_and(|d| d.permits(self.src, self.dst)),
        }
    }

    fn link_ifaces(&self, r: &str) -> BTreeSet<&str> {
        self.net
            .topology
            .links
            .iter()
            .filter_map(|l| l.oriented(r).map(|(near, _)| near.iface.as_str()))
            .collect()
    }

    fn runs(&self, r: &str, p: Proto) -> bool {
        match p {
            Proto::Ospf => self.cfg(r).ospf.is_some(),
            Proto::Bgp => self.cfg(r).bgp.is_some(),
        }
    }

    fn ospf_enabled_on(&self, r: &str, i: &str) -> bool {
        let cfg = self.cfg(r);
        match (cfg.ospf.as_ref(), cfg.interface(i).and_then(|x| x.prefix())) {
            (Some(o), Some(p)) => o.covers(p),
            _ => false,
        }
    }

    fn session(&self, r: &str, peer: &str, peer_iface: &str) -> bool {
        self.cfg(r)
            .bgp
            .as_ref()
            .and_then(|b| b.neighbor(peer))
            .is_some_and(|n| n.iface == peer_iface)
    }

    /// Whether protocol `p` exchanges routes over link `l`.
    fn adjacent(&self, p: Proto, l: LinkId) -> bool {
        let link = &self.net.topology.links[l];
        let (a, b) = (&link.a, &link.b);
        if !self.runs(&a.router, p) || !self.runs(&b.router, p) {
            return false;
        }
        match p {
            Proto::Ospf => {
                let passive = |r: &str, i: &str| self.cfg(r).interface(i).is_some_and(|x| x.ospf_passive.is_some());
                self.ospf_enabled_on(&a.router, &a.iface)
                    && self.ospf_enabled_on(&b.router, &b.iface)
                    && !passive(&a.router, &a.iface)
                    && !passive(&b.router, &b.iface)
            }
            Proto::Bgp => self.session(&a.router, &b.router, &b.iface) && self.session(&b.router, &a.router, &a.iface),
        }
    }

    /// The prefix `r` originates for the destination, if any. OSPF network
    /// statements that only enable links do not originate.
    fn originated(&self, r: &str, p: Proto) -> Option<Prefix> {
        let cfg = self.cfg(r);
        match p {
            Proto::Ospf => {
                let o = cfg.ospf.as_ref()?;
                let links = self.link_ifaces(r);
                let (mut on_links, mut elsewhere) = (Vec::new(), Vec::new());
                for i in &cfg.interfaces {
                    if let Some(q) = i.prefix() {
                        if links.contains(i.name.as_str()) {
                            on_links.push(q);
                        } else {
                            elsewhere.push(q);
                        }
                    }
                }
                o.networks
                    .iter()
                    .map(|n| n.value)
                    .filter(|n| elsewhere.iter().any(|q| n.covers(*q)) || !on_links.iter().any(|q| n.covers(*q)))
                    .find(|n| n.contains_addr(self.dst))
            }
            Proto::Bgp => cfg.bgp.as_ref()?.networks.iter().map(|n| n.value).find(|n| n.contains_addr(self.dst)),
        }
    }

    fn export_cost(&self, r: &str, iface: &str, p: Proto) -> u64 {
        match p {
            Proto::Ospf => self
                .cfg(r)
                .interface(iface)
                .and_then(|i| i.ospf_cost.as_ref().map(|c| c.value as u64))
                .unwrap_or(1),
            Proto::Bgp => 1,
        }
    }

    fn filter_permits(&self, r: &str, peer: &str, p: Prefix) -> bool {
        let rules: &[FilterRule] = match self.cfg(r).bgp.as_ref().and_then(|b| b.filters.get(peer)) {
            Some(v) if !v.is_empty() => v,
            _ => return true,
        };
        rules
            .iter()
            .find(|f| f.prefix.covers(p))
            .is_some_and(|f| f.action == Action::Permit)
    }

    /// Distance-vector iteration from empty tables until nothing changes.
    fn converge(&self, p: Proto, routers: &[String]) -> BTreeMap<String, Option<Route>> {
        let topo = &self.net.topology;
        let index: BTreeMap<&str, usize> = routers.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let mut best: Vec<Option<Route>> = vec![None; routers.len()];
        let origin: Vec<Option<Prefix>> = routers
            .iter()
            .map(|r| if self.runs(r, p) { self.originated(r, p) } else { None })
            .collect();
        let usable: Vec<bool> = (0..topo.links.len()).map(|l| self.adjacent(p, l) && self.link_up(l)).collect();
        for _ in 0..4 * routers.len() + 4 {
            let mut next = vec![None; routers.len()];
            for (ri, r) in routers.iter().enumerate() {
                if !self.runs(r, p) {
                    continue;
                }
                let mut cands: Vec<(u64, usize, Prefix)> = Vec::new();
                for (n, l) in topo.neighbors(r) {
                    if !usable[l] {
                        continue;
                    }
                    let ni = index[n.as_str()];
                    let prefix = match (origin[ni], best[ni]) {
                        (Some(q), _) => q,
                        (None, Some(b)) => b.prefix,
                        (None, None) => continue,
                    };
                    if p == Proto::Bgp && !self.filter_permits(&n, r, prefix) {
                        continue;
                    }
                    let (near_n, _) = topo.links[l].oriented(&n).unwrap();
                    let cost = self.export_cost(&n, &near_n.iface, p);
                    let metric = match origin[ni] {
                        Some(_) => cost,
                        None => best[ni].unwrap().metric + cost,
                    };
                    cands.push((metric, ni, prefix));
                }
                // Neighbor indices follow name order, so the tuple order breaks
                // ties by name.
                next[ri] = cands.into_iter().min_by_key(|c| (c.0, c.1)).map(|(metric, ni, prefix)| Route {
                    metric,
                    prefix,
                    from: Some(ni),
                });
            }
            if next == best {
                return routers.iter().cloned().zip(best).collect();
            }
            best = next;
        }
        panic!("{p:?} routes did not converge");
    }
}

fn subnet_by_prefix(net: &Network, p: Prefix) -> Option<&Subnet> {
    net.topology.subnets.values().find(|s| s.prefix == p)
}

/// Forwarding of the class `tc` with the given links failed (indexed like the
/// topology's link list).
pub fn simulate(net: &Network, failed: &[bool], tc: &TrafficClass) -> SimResult {
    assert_eq!(failed.len(), net.topology.links.len());
    let ctx = Ctx {
        net,
        failed,
        src: tc.src_addr(),
        dst: tc.dst_addr(),
    };
    let topo = &net.topology;
    let mut routers = topo.routers.clone();
    routers.sort();
    let ospf = ctx.converge(Proto::Ospf, &routers);
    let bgp = ctx.converge(Proto::Bgp, &routers);
    let dst = subnet_by_prefix(net, tc.dst).expect("destination subnet");

    let mut res = SimResult {
        next_hop: BTreeMap::new(),
        fwd: BTreeMap::new(),
        local: BTreeMap::new(),
        reach: BTreeMap::new(),
        decision: BTreeMap::new(),
    };
    for r in &routers {
        let conn = *r == dst.attach.router && ctx.if_up(r, &dst.attach.iface);
        let local = conn && ctx.acl_ok(r, &dst.attach.iface, false);
        let mut nh = None;
        if !conn {
            let cfg = ctx.cfg(r);
            let mut statics: Vec<_> = cfg.statics.iter().collect();
            statics.sort_by(|a, b| a.next_hop.cmp(&b.next_hop));
            let st = statics.into_iter().find(|s| {
                s.prefix.contains_addr(ctx.dst) && topo.link_between(r, &s.next_hop).is_some_and(|l| ctx.link_up(l))
            });
            let offer = |p: Proto, table: &BTreeMap<String, Option<Route>>| {
                if ctx.runs(r, p) && ctx.originated(r, p).is_none() {
                    table[r].and_then(|x| x.from).map(|i| routers[i].clone())
                } else {
                    None
                }
            };
            nh = match st {
                Some(s) => Some(s.next_hop.clone()),
                None => offer(Proto::Bgp, &bgp).or_else(|| offer(Proto::Ospf, &ospf)),
            };
        }
        for (n, l) in topo.neighbors(r) {
            let (near, far) = topo.links[l].oriented(r).unwrap();
            let f = nh.as_deref() == Some(n.as_str())
                && ctx.acl_ok(r, &near.iface, false)
                && ctx.acl_ok(&far.router, &far.iface, true);
            res.fwd.insert((r.clone(), n.clone()), f);
        }
        let decision = if conn {
            if local {
                Decision::Deliver
            } else {
                Decision::Drop(DropReason::Acl)
            }
        } else {
            match &nh {
                None => Decision::Drop(DropReason::NoRoute),
                Some(n) if res.fwd[&(r.clone(), n.clone())] => Decision::Forward(n.clone()),
                Some(_) => Decision::Drop(DropReason::Acl),
            }
        };
        res.decision.insert(r.clone(), decision);
        res.local.insert(r.clone(), local);
        res.next_hop.insert(r.clone(), nh);
    }
    for r in &routers {
        let mut seen = BTreeSet::new();
        let mut at = r.clone();
        let ok = loop {
            if res.local[&at] {
                break true;
            }
            if !seen.insert(at.clone()) {
                break false;
            }
            match &res.decision[&at] {
                Decision::Forward(n) => at = n.clone(),
                _ => break false,
            }
        };
        res.reach.insert(r.clone(), ok);
    }
    for r in &routers {
        if let Decision::Forward(_) = res.decision[r] {
            if !res.reach[r] && path_loops(&res, r) {
                res.decision.insert(r.clone(), Decision::Drop(DropReason::Loop));
            }
        }
    }
    res
}

fn path_loops(res: &SimResult, r: &str) -> bool {
    let mut seen = BTreeSet::new();
    let mut at = r.to_string();
    while let Some(Decision::Forward(n)) = res.decision.get(&at) {
        if !seen.insert(at.clone()) {
            return true;
        }
        at = n.clone();
    }
    false
}

/// Whether the packet from the source subnet arrives at the destination.
pub fn delivered(net: &Network, res: &SimResult, tc: &TrafficClass) -> bool {
    let src = subnet_by_prefix(net, tc.src).expect("source subnet");
    let (r, i) = (&src.attach.router, &src.attach.iface);
    let cfg = &net.routers[r];
    let iface = cfg.interface(i).expect("attach interface");
    let acl = match &iface.in_acl {
        None => true,
        Some(a) => cfg.acls.get(&a.acl).is_some_and(|d| d.permits(tc.src_addr(), tc.dst_addr())),
    };
    iface.enabled() && acl && res.reach[r]
}

/// Whether `req` holds under the given failures.
pub fn satisfied(net: &Network, req: &Requirement, failed: &[bool]) -> bool {
    let tc = req.traffic_class(&net.topology);
    let ok = delivered(net, &simulate(net, failed, &tc), &tc);
    match req.kind {
        Kind::Reachable => ok,
        Kind::Blocked => !ok,
    }
}

/// Every failure assignment with at most `k` failed links, in order of
/// increasing size and then lexicographic link index.
pub fn assignments(links: usize, k: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    for size in 0..=k.min(links) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut a = vec![false; links];
            idx.iter().for_each(|&i| a[i] = true);
            out.push(a);
            // next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == links - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments_count_binomials() {
        assert_eq!(assignments(3, 1).len(), 4);
        assert_eq!(assignments(5, 2).len(), 1 + 5 + 10);
        assert_eq!(assignments(2, 5).len(), 4);
        assert_eq!(assignments(0, 0), vec![Vec::<bool>::new()]);
        let all = assignments(4, 4);
        let set: BTreeSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), 16);
    }
}
