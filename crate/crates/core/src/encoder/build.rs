use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Advertisement, ConfigKey, ConfigKind, ConfigVar, ConstraintSystem, EncodeError, Omission, Proto};
use crate::netmodel::config::{Action, AclDef, FilterRule};
use crate::netmodel::{Network, Prefix, Span};
use crate::requirements::{Kind, Requirement};
use crate::solver::{Category, Label, LabelId, System, TermId};

const PREFIX_W: u32 = 32;
const PATH_W: u32 = 8;

type Key2 = (String, String);

struct Site {
    lo: TermId,
    hi: TermId,
}

struct StaticSite {
    next_hop: String,
    lo: TermId,
    hi: TermId,
}

struct Import {
    neighbor: String,
    valid: TermId,
    metric: TermId,
    lo: TermId,
    hi: TermId,
}

struct Best {
    valid: TermId,
    sel: BTreeMap<String, TermId>,
    metric: TermId,
    lo: TermId,
    hi: TermId,
}

struct Builder<'a> {
    net: &'a Network,
    sys: System,
    next: LabelId,
    cvs: Vec<ConfigVar>,
    logic: Vec<LabelId>,
    config_consts: BTreeSet<u64>,
    logic_consts: BTreeSet<u64>,
    d: TermId,
    s: TermId,
    w: u32,
    if_up: HashMap<Key2, TermId>,
    acl_in: HashMap<Key2, TermId>,
    acl_out: HashMap<Key2, TermId>,
    failed: Vec<TermId>,
    up: Vec<TermId>,
    adj: HashMap<(Proto, usize), TermId>,
    cost: HashMap<Key2, TermId>,
    origins: HashMap<(Proto, String), Vec<Site>>,
    statics: HashMap<String, Vec<StaticSite>>,
    filters: HashMap<Key2, TermId>,
    adverts: BTreeMap<(Proto, String, String), Advertisement>,
}

fn none_prefix() -> (u64, u64) {
    (1, 0)
}

impl Builder<'_> {
    fn label(&mut self, cat: Category, meta: String) -> Label {
        let id = self.next;
        self.next += 1;
        Label::new(id, cat, meta)
    }

    fn logic(&mut self, meta: impl Into<String>, parts: Vec<TermId>) {
        let f = self.sys.t().and(parts);
        let l = self.label(Category::Logic, meta.into());
        self.logic.push(l.id);
        self.sys.assert_labeled(f, l).expect("fresh label");
    }

    #[allow(clippy::too_many_arguments)]
    fn config(
        &mut self,
        kind: ConfigKind,
        router: &str,
        site: String,
        terms: Vec<TermId>,
        binding: TermId,
        spans: Vec<Span>,
        omissions: Vec<Omission>,
    ) {
        let key = ConfigKey {
            kind,
            router: router.to_string(),
            site,
        };
        let where_ = match (spans.first(), omissions.first()) {
            (Some(s), _) => s.to_string(),
            (None, Some(_)) => "absent".to_string(),
            (None, None) => "-".to_string(),
        };
        let l = self.label(Category::Config, format!("{key} @ {where_}"));
        let label = l.id;
        self.sys.assert_labeled(binding, l).expect("fresh label");
        self.cvs.push(ConfigVar {
            key,
            terms,
            binding,
            label,
            present: omissions.is_empty(),
            spans,
            omissions,
        });
    }

    fn cconst(&mut self, v: u64, w: u32) -> TermId {
        self.config_consts.insert(v);
        self.sys.t().int_const(v, w)
    }

    fn lconst(&mut self, v: u64, w: u32) -> TermId {
        self.logic_consts.insert(v);
        self.sys.t().int_const(v, w)
    }

    fn prefix_consts(&mut self, p: Option<Prefix>) -> (TermId, TermId) {
        let (lo, hi) = match p {
            Some(p) => (p.lo() as u64, p.hi() as u64),
            None => none_prefix(),
        };
        (self.cconst(lo, PREFIX_W), self.cconst(hi, PREFIX_W))
    }

    fn prefix_vars(&mut self, name: &str) -> (TermId, TermId) {
        let lo = self.sys.t().new_int_var(format!("{name}.lo"), PREFIX_W);
        let hi = self.sys.t().new_int_var(format!("{name}.hi"), PREFIX_W);
        (lo, hi)
    }

    fn bind_prefix(&mut self, lo: TermId, hi: TermId, p: Option<Prefix>) -> TermId {
        let (cl, ch) = self.prefix_consts(p);
        let a = self.sys.t().eq(lo, cl);
        let b = self.sys.t().eq(hi, ch);
        self.sys.t().and2(a, b)
    }

    fn member(&mut self, x: TermId, lo: TermId, hi: TermId) -> TermId {
        self.sys.t().in_range(x, lo, hi)
    }

    fn addr_match(&mut self, x: TermId, p: Option<Prefix>) -> TermId {
        match p {
            None => self.sys.t().tt(),
            Some(p) => {
                let (lo, hi) = self.prefix_consts(Some(p));
                self.member(x, lo, hi)
            }
        }
    }

    fn acl_formula(&mut self, acl: &AclDef) -> TermId {
        let mut f = self.sys.t().ff();
        for r in acl.rules.iter().rev() {
            let ms = self.addr_match(self.s, r.src);
            let md = self.addr_match(self.d, r.dst);
            let m = self.sys.t().and2(ms, md);
            let act = self.sys.t().bool_const(r.action == Action::Permit);
            f = self.sys.t().ite(m, act, f);
        }
        f
    }

    fn filter_formula(&mut self, rules: &[FilterRule], lo: TermId, hi: TermId) -> TermId {
        let mut f = self.sys.t().ff();
        for r in rules.iter().rev() {
            let (rl, rh) = self.prefix_consts(Some(r.prefix));
            let a = self.sys.t().ule(rl, lo);
            let b = self.sys.t().ule(hi, rh);
            let m = self.sys.t().and2(a, b);
            let act = self.sys.t().bool_const(r.action == Action::Permit);
            f = self.sys.t().ite(m, act, f);
        }
        f
    }

    fn acl_term(&mut self, dir_in: bool, r: &str, i: &str) -> TermId {
        let m = if dir_in { &self.acl_in } else { &self.acl_out };
        match m.get(&(r.to_string(), i.to_string())) {
            Some(&t) => t,
            None => self.sys.t().tt(),
        }
    }

    fn iface_up(&mut self, r: &str, i: &str) -> TermId {
        self.if_up[&(r.to_string(), i.to_string())]
    }
}

/// Builds the constraint system for one requirement. Assumes the network
/// validates.
pub fn encode(net: &Network, req: &Requirement) -> Result<ConstraintSystem, EncodeError> {
    let topo = &net.topology;
    let mut routers = topo.routers.clone();
    routers.sort();
    if routers.len() > 254 {
        return Err(EncodeError::UnsupportedFeature(format!(
            "{} routers exceed the {PATH_W}-bit path length",
            routers.len()
        )));
    }
    let max_cost = net.max_ospf_cost() as u64;
    let w = if (routers.len() as u64 + 1) * max_cost < 65536 { 16 } else { 32 };

    let mut sys = System::new();
    let d = sys.t().new_int_var("destination", PREFIX_W);
    let s = sys.t().new_int_var("source", PREFIX_W);
    let mut b = Builder {
        net,
        sys,
        next: 0,
        cvs: Vec::new(),
        logic: Vec::new(),
        config_consts: BTreeSet::new(),
        logic_consts: BTreeSet::new(),
        d,
        s,
        w,
        if_up: HashMap::new(),
        acl_in: HashMap::new(),
        acl_out: HashMap::new(),
        failed: Vec::new(),
        up: Vec::new(),
        adj: HashMap::new(),
        cost: HashMap::new(),
        origins: HashMap::new(),
        statics: HashMap::new(),
        filters: HashMap::new(),
        adverts: BTreeMap::new(),
    };

    let tc = req.traffic_class(topo);
    let dst_sub = topo.subnets[&req.dst].clone();
    let src_sub = topo.subnets[&req.src].clone();

    // Traffic class.
    let dv = b.lconst(tc.dst_addr() as u64, PREFIX_W);
    let sv = b.lconst(tc.src_addr() as u64, PREFIX_W);
    let e1 = b.sys.t().eq(d, dv);
    let e2 = b.sys.t().eq(s, sv);
    b.logic("traffic class", vec![e1, e2]);

    // Link failures and the failure budget.
    let link_names: Vec<String> = topo.links.iter().map(|l| l.name()).collect();
    for n in &link_names {
        let f = b.sys.t().new_bool_var(format!("failed({n})"));
        b.failed.push(f);
    }
    {
        let k = req.max_failures;
        let ff = b.sys.t().ff();
        let tt = b.sys.t().tt();
        let mut cnt = vec![ff; k + 1];
        for &x in &b.failed.clone() {
            for j in (0..=k).rev() {
                let prev = if j == 0 { tt } else { cnt[j - 1] };
                let step = b.sys.t().and2(x, prev);
                cnt[j] = b.sys.t().or2(cnt[j], step);
            }
        }
        let bound = b.sys.t().not(cnt[k]);
        b.logic(format!("at most {k} failed links"), vec![bound]);
    }

    encode_interfaces(&mut b, &routers);
    encode_links(&mut b);
    encode_acls(&mut b, &routers);
    encode_ospf_config(&mut b, &routers);
    encode_bgp_config(&mut b, &routers);
    encode_static_config(&mut b, &routers);

    // Protocol behaviour, selection and forwarding per router.
    let mut nh_vars = BTreeMap::new();
    let mut fwd_vars = BTreeMap::new();
    let mut local_vars = BTreeMap::new();
    for r in &routers {
        let mut best = BTreeMap::new();
        for p in [Proto::Ospf, Proto::Bgp] {
            if let Some(bp) = encode_protocol(&mut b, r, p) {
                best.insert(p, bp);
            }
        }
        let mut parts = Vec::new();
        let conn = if *r == dst_sub.attach.router {
            b.iface_up(r, &dst_sub.attach.iface)
        } else {
            b.sys.t().ff()
        };
        let not_conn = b.sys.t().not(conn);

        let sites = b.statics.remove(r).unwrap_or_default();
        let mut usable = Vec::new();
        for st in &sites {
            let m = b.member(d, st.lo, st.hi);
            let l = topo.link_between(r, &st.next_hop).expect("static next hop adjacent");
            let u = b.sys.t().and2(m, b.up[l]);
            usable.push(u);
        }
        let static_any = b.sys.t().or(usable.clone());
        let no_static = b.sys.t().not(static_any);

        let offers = |b: &mut Builder, p: Proto| -> (TermId, Option<&Best>) {
            match best.get(&p) {
                Some((origin, bp)) => {
                    let no = b.sys.t().not(*origin);
                    (b.sys.t().and2(no, bp.valid), Some(bp))
                }
                None => (b.sys.t().ff(), None),
            }
        };
        let (offer_b, best_b) = offers(&mut b, Proto::Bgp);
        let (offer_o, best_o) = offers(&mut b, Proto::Ospf);
        let no_bgp = b.sys.t().not(offer_b);

        for (n, l) in topo.neighbors(r) {
            let mut st_terms = Vec::new();
            for (j, st) in sites.iter().enumerate() {
                if st.next_hop == n {
                    let earlier: Vec<TermId> = usable[..j].iter().map(|&u| b.sys.t().not(u)).collect();
                    let mut all = earlier;
                    all.push(usable[j]);
                    st_terms.push(b.sys.t().and(all));
                }
            }
            let st_n = b.sys.t().or(st_terms);
            let sel_b = best_b.and_then(|bp| bp.sel.get(&n).copied());
            let sel_o = best_o.and_then(|bp| bp.sel.get(&n).copied());
            let b_n = match sel_b {
                Some(sel) => b.sys.t().and2(offer_b, sel),
                None => b.sys.t().ff(),
            };
            let o_n = match sel_o {
                Some(sel) => b.sys.t().and([no_bgp, offer_o, sel]),
                None => b.sys.t().ff(),
            };
            let dyn_n = b.sys.t().or2(b_n, o_n);
            let dyn_n = b.sys.t().and2(no_static, dyn_n);
            let route = b.sys.t().or2(st_n, dyn_n);
            let nh_def = b.sys.t().and2(not_conn, route);
            let nh = b.sys.t().new_bool_var(format!("nh({r}->{n})"));
            parts.push(b.sys.t().iff(nh, nh_def));

            let (near, far) = topo.links[l].oriented(r).unwrap();
            let (near, far) = (near.clone(), far.clone());
            let out_acl = b.acl_term(false, r, &near.iface);
            let in_acl = b.acl_term(true, &far.router, &far.iface);
            let fwd_def = b.sys.t().and([nh, out_acl, in_acl]);
            let fwd = b.sys.t().new_bool_var(format!("fwd({r}->{n})"));
            parts.push(b.sys.t().iff(fwd, fwd_def));
            nh_vars.insert((r.clone(), n.clone()), nh);
            fwd_vars.insert((r.clone(), n.clone()), fwd);
        }
        let local_def = if *r == dst_sub.attach.router {
            let a = b.acl_term(false, r, &dst_sub.attach.iface);
            b.sys.t().and2(conn, a)
        } else {
            b.sys.t().ff()
        };
        let local = b.sys.t().new_bool_var(format!("local({r})"));
        parts.push(b.sys.t().iff(local, local_def));
        local_vars.insert(r.clone(), local);
        b.logic(format!("{r}: selection and forwarding"), parts);
    }

    // Reachability, unrolled.
    let mut level: BTreeMap<String, TermId> = local_vars.clone();
    for _ in 0..routers.len() {
        let mut next = BTreeMap::new();
        for r in &routers {
            let mut alts = vec![local_vars[r]];
            for (n, _) in topo.neighbors(r) {
                let f = fwd_vars[&(r.clone(), n.clone())];
                alts.push(b.sys.t().and2(f, level[&n]));
            }
            next.insert(r.clone(), b.sys.t().or(alts));
        }
        level = next;
    }
    let mut reach_vars = BTreeMap::new();
    let mut parts = Vec::new();
    for r in &routers {
        let v = b.sys.t().new_bool_var(format!("reach({r})"));
        parts.push(b.sys.t().iff(v, level[r]));
        reach_vars.insert(r.clone(), v);
    }
    b.logic("reachability", parts);

    // Requirement and its negation.
    let src_up = b.iface_up(&src_sub.attach.router, &src_sub.attach.iface);
    let src_acl = b.acl_term(true, &src_sub.attach.router, &src_sub.attach.iface);
    let reach_src = b.sys.t().and([src_up, src_acl, reach_vars[&src_sub.attach.router]]);
    let r_formula = match req.kind {
        Kind::Reachable => reach_src,
        Kind::Blocked => b.sys.t().not(reach_src),
    };
    let word = match req.kind {
        Kind::Reachable => "reach",
        Kind::Blocked => "blocked",
    };
    let rl = b.label(Category::Requirement, format!("{}: {word}({} -> {})", req.id, req.src, req.dst));
    let req_label = rl.id;
    b.sys.assert_labeled(r_formula, rl).expect("fresh label");
    let neg = b.sys.t().not(r_formula);
    let nl = b.label(Category::Requirement, format!("{}: violated", req.id));
    let neg_req_label = nl.id;
    b.sys.assert_labeled(neg, nl).expect("fresh label");

    let by_label = b.cvs.iter().enumerate().map(|(i, c)| (c.label, i)).collect();
    Ok(ConstraintSystem {
        sys: b.sys,
        requirement: req.clone(),
        traffic: tc,
        src_router: src_sub.attach.router.clone(),
        dst_router: dst_sub.attach.router.clone(),
        routers,
        config_vars: b.cvs,
        fail_vars: b.failed,
        link_names,
        nh_vars,
        fwd_vars,
        local_vars,
        reach_vars,
        adverts: b.adverts,
        dst_var: d,
        src_var: s,
        cost_width: w,
        logic_labels: b.logic,
        req_label,
        neg_req_label,
        by_label,
        pins: HashMap::new(),
        config_constants: b.config_consts,
        logic_constants: b.logic_consts,
    })
}

fn encode_interfaces(b: &mut Builder, routers: &[String]) {
    let net = b.net;
    for r in routers {
        let cfg = &net.routers[r];
        for i in net.topology.used_interfaces(r) {
            let iface = cfg.interface(&i).expect("validated interface");
            let v = b.sys.t().new_bool_var(format!("up({r}.{i})"));
            let val = b.sys.t().bool_const(iface.enabled());
            let bind = b.sys.t().iff(v, val);
            let span = iface.shutdown.clone().unwrap_or_else(|| iface.span.clone());
            b.config(ConfigKind::InterfaceState, r, i.clone(), vec![v], bind, vec![span], vec![]);
            b.if_up.insert((r.clone(), i), v);
        }
    }
}

fn encode_links(b: &mut Builder) {
    let net = b.net;
    for (li, link) in net.topology.links.iter().enumerate() {
        let name = link.name();
        let ends = [&link.a, &link.b];
        let ifs: Vec<_> = ends
            .iter()
            .map(|e| net.routers[&e.router].interface(&e.iface).expect("validated interface"))
            .collect();
        let configured = match (ifs[0].prefix(), ifs[1].prefix()) {
            (Some(p), Some(q)) => p == q && ifs[0].address != ifs[1].address,
            _ => false,
        };
        let mut spans = Vec::new();
        let mut omissions = Vec::new();
        for (e, i) in ends.iter().zip(&ifs) {
            match &i.address {
                Some(a) => spans.push(a.span.clone()),
                None => omissions.push(Omission {
                    router: e.router.clone(),
                    kind: ConfigKind::L3Adjacency,
                    site: name.clone(),
                    suggestion: format!("interface {}: ip <address on the {name} subnet>", e.iface),
                }),
            }
        }
        let v = b.sys.t().new_bool_var(format!("l3({name})"));
        let val = b.sys.t().bool_const(configured);
        let bind = b.sys.t().iff(v, val);
        b.config(ConfigKind::L3Adjacency, &link.a.router, name.clone(), vec![v], bind, spans, omissions);
        let nf = b.sys.t().not(b.failed[li]);
        let ua = b.iface_up(&link.a.router, &link.a.iface);
        let ub = b.iface_up(&link.b.router, &link.b.iface);
        let up = b.sys.t().and([nf, v, ua, ub]);
        b.up.push(up);
    }
}

fn encode_acls(b: &mut Builder, routers: &[String]) {
    let net = b.net;
    let mut applied: BTreeSet<Key2> = BTreeSet::new();
    let (mut any_in, mut any_out) = (false, false);
    for r in routers {
        for i in &net.routers[r].interfaces {
            if let Some(a) = &i.in_acl {
                any_in = true;
                applied.insert((r.clone(), a.acl.clone()));
            }
            if let Some(a) = &i.out_acl {
                any_out = true;
                applied.insert((r.clone(), a.acl.clone()));
            }
        }
    }
    let mut defs = HashMap::new();
    for (r, name) in &applied {
        let acl = &net.routers[r].acls[name];
        let v = b.sys.t().new_bool_var(format!("acl({r}:{name})"));
        let f = b.acl_formula(acl);
        let bind = b.sys.t().iff(v, f);
        let spans = acl.rules.iter().map(|x| x.span.clone()).collect();
        b.config(ConfigKind::AclDef, r, name.clone(), vec![v], bind, spans, vec![]);
        defs.insert((r.clone(), name.clone()), v);
    }
    for r in routers {
        let cfg = &net.routers[r];
        for i in net.topology.used_interfaces(r) {
            let iface = cfg.interface(&i).unwrap();
            for (used, dir_in) in [(any_in, true), (any_out, false)] {
                if !used {
                    continue;
                }
                let (apply, kind, word) = if dir_in {
                    (&iface.in_acl, ConfigKind::AclUseIn, "in")
                } else {
                    (&iface.out_acl, ConfigKind::AclUseOut, "out")
                };
                let v = b.sys.t().new_bool_var(format!("acl{word}({r}.{i})"));
                let (val, spans, omissions) = match apply {
                    Some(a) => (defs[&(r.clone(), a.acl.clone())], vec![a.span.clone()], vec![]),
                    None => (
                        b.sys.t().tt(),
                        vec![],
                        vec![Omission {
                            router: r.clone(),
                            kind,
                            site: i.clone(),
                            suggestion: format!("interface {i}: ip access-group <acl> {word}"),
                        }],
                    ),
                };
                let bind = b.sys.t().iff(v, val);
                b.config(kind, r, i.clone(), vec![v], bind, spans, omissions);
                let m = if dir_in { &mut b.acl_in } else { &mut b.acl_out };
                m.insert((r.clone(), i.clone()), v);
            }
        }
    }
}

/// Interfaces of `r` that sit on links.
fn link_ifaces(net: &Network, r: &str) -> BTreeSet<String> {
    net.topology
        .links
        .iter()
        .filter_map(|l| l.oriented(r).map(|(near, _)| near.iface.clone()))
        .collect()
}

fn encode_ospf_config(b: &mut Builder, routers: &[String]) {
    let net = b.net;
    let topo = &net.topology;
    let ospf: BTreeSet<&String> = routers.iter().filter(|r| net.routers[*r].ospf.is_some()).collect();
    let links: Vec<usize> = (0..topo.links.len())
        .filter(|&l| ospf.contains(&topo.links[l].a.router) && ospf.contains(&topo.links[l].b.router))
        .collect();

    // The first network statement enabling OSPF on a link interface.
    let covering = |r: &str, i: &str| -> Option<Span> {
        let cfg = &net.routers[r];
        let p = cfg.interface(i)?.prefix()?;
        cfg.ospf.as_ref()?.networks.iter().find(|n| n.value.covers(p)).map(|n| n.span.clone())
    };
    let adj_used = links.iter().any(|&l| {
        let k = &topo.links[l];
        covering(&k.a.router, &k.a.iface).is_some() && covering(&k.b.router, &k.b.iface).is_some()
    });
    for &l in &links {
        let link = &topo.links[l];
        let adj = if adj_used {
            let name = link.name();
            let mut spans = Vec::new();
            let mut omissions = Vec::new();
            for e in [&link.a, &link.b] {
                match covering(&e.router, &e.iface) {
                    Some(s) => spans.push(s),
                    None => {
                        let p = net.routers[&e.router]
                            .interface(&e.iface)
                            .and_then(|i| i.prefix())
                            .map(|p| p.to_string())
                            .unwrap_or_else(|| format!("<{} subnet>", e.iface));
                        omissions.push(Omission {
                            router: e.router.clone(),
                            kind: ConfigKind::OspfAdjacency,
                            site: name.clone(),
                            suggestion: format!("router ospf: network {p}"),
                        });
                    }
                }
            }
            let v = b.sys.t().new_bool_var(format!("ospfAdj({name})"));
            let val = b.sys.t().bool_const(omissions.is_empty());
            let bind = b.sys.t().iff(v, val);
            b.config(ConfigKind::OspfAdjacency, &link.a.router, name, vec![v], bind, spans, omissions);
            v
        } else {
            b.sys.t().ff()
        };
        b.adj.insert((Proto::Ospf, l), adj);
    }

    let passive_used = ospf.iter().any(|r| net.routers[*r].interfaces.iter().any(|i| i.ospf_passive.is_some()));
    let cost_used = ospf.iter().any(|r| net.routers[*r].interfaces.iter().any(|i| i.ospf_cost.is_some()));
    let mut passive: HashMap<Key2, TermId> = HashMap::new();
    let mut domain = Vec::new();
    for r in &ospf {
        let cfg = &net.routers[*r];
        for i in link_ifaces(net, r) {
            let iface = cfg.interface(&i).unwrap();
            if passive_used {
                let v = b.sys.t().new_bool_var(format!("passive({r}.{i})"));
                let val = b.sys.t().bool_const(iface.ospf_passive.is_some());
                let bind = b.sys.t().iff(v, val);
                let (spans, om) = match &iface.ospf_passive {
                    Some(s) => (vec![s.clone()], vec![]),
                    None => (
                        vec![],
                        vec![Omission {
                            router: r.to_string(),
                            kind: ConfigKind::OspfPassive,
                            site: i.clone(),
                            suggestion: format!("interface {i}: ospf passive"),
                        }],
                    ),
                };
                b.config(ConfigKind::OspfPassive, r, i.clone(), vec![v], bind, spans, om);
                passive.insert((r.to_string(), i.clone()), v);
            }
            let c = if cost_used {
                let v = b.sys.t().new_int_var(format!("cost({r}.{i})"), b.w);
                let configured = iface.ospf_cost.as_ref().map(|c| c.value).unwrap_or(1);
                let k = b.cconst(configured as u64, b.w);
                let bind = b.sys.t().eq(v, k);
                let (spans, om) = match &iface.ospf_cost {
                    Some(s) => (vec![s.span.clone()], vec![]),
                    None => (
                        vec![],
                        vec![Omission {
                            router: r.to_string(),
                            kind: ConfigKind::OspfCost,
                            site: i.clone(),
                            suggestion: format!("interface {i}: ospf cost <n>"),
                        }],
                    ),
                };
                b.config(ConfigKind::OspfCost, r, i.clone(), vec![v], bind, spans, om);
                let one = b.lconst(1, b.w);
                domain.push(b.sys.t().ule(one, v));
                if b.w > 16 {
                    let max = b.lconst(65535, b.w);
                    domain.push(b.sys.t().ule(v, max));
                }
                v
            } else {
                b.lconst(1, b.w)
            };
            b.cost.insert((r.to_string(), i), c);
        }
    }
    if !domain.is_empty() {
        b.logic("OSPF cost domain", domain);
    }
    for &l in &links {
        let link = &topo.links[l];
        let mut eff = vec![b.adj[&(Proto::Ospf, l)]];
        for e in [&link.a, &link.b] {
            if let Some(&p) = passive.get(&(e.router.clone(), e.iface.clone())) {
                eff.push(b.sys.t().not(p));
            }
        }
        let t = b.sys.t().and(eff);
        b.adj.insert((Proto::Ospf, l), t);
    }

    // Origination: statements that are not solely enabling OSPF on links.
    let mut site_lists: Vec<(String, Vec<(Prefix, Option<Span>)>)> = Vec::new();
    for r in &ospf {
        let cfg = &net.routers[*r];
        let links_here = link_ifaces(net, r);
        let link_prefixes: Vec<Prefix> = links_here.iter().filter_map(|i| cfg.interface(i)?.prefix()).collect();
        let other_prefixes: Vec<Prefix> = cfg
            .interfaces
            .iter()
            .filter(|i| !links_here.contains(&i.name))
            .filter_map(|i| i.prefix())
            .collect();
        let mut sites = Vec::new();
        for n in &cfg.ospf.as_ref().unwrap().networks {
            let covers_link = link_prefixes.iter().any(|p| n.value.covers(*p));
            let covers_other = other_prefixes.iter().any(|p| n.value.covers(*p));
            if covers_other || !covers_link {
                sites.push((n.value, Some(n.span.clone())));
            }
        }
        site_lists.push((r.to_string(), sites));
    }
    let orig_used = site_lists.iter().any(|(_, s)| !s.is_empty());
    for (r, mut sites) in site_lists {
        if !orig_used {
            continue;
        }
        let cfg = &net.routers[&r];
        let links_here = link_ifaces(net, &r);
        for i in &cfg.interfaces {
            if links_here.contains(&i.name) {
                continue;
            }
            if let Some(p) = i.prefix() {
                if !cfg.ospf.as_ref().unwrap().covers(p) && !sites.iter().any(|(q, _)| *q == p) {
                    sites.push((p, None));
                }
            }
        }
        let mut out = Vec::new();
        for (p, span) in sites {
            let key = p.to_string();
            let (lo, hi) = b.prefix_vars(&format!("ospfOrig({r}:{key})"));
            let present = span.is_some();
            let bind = b.bind_prefix(lo, hi, if present { Some(p) } else { None });
            let (spans, om) = match span {
                Some(s) => (vec![s], vec![]),
                None => (
                    vec![],
                    vec![Omission {
                        router: r.clone(),
                        kind: ConfigKind::OspfOriginate,
                        site: key.clone(),
                        suggestion: format!("router ospf: network {p}"),
                    }],
                ),
            };
            b.config(ConfigKind::OspfOriginate, &r, key.clone(), vec![lo, hi], bind, spans, om);
            out.push(Site { lo, hi });
        }
        b.origins.insert((Proto::Ospf, r), out);
    }
    for &l in &links {
        let link = &topo.links[l];
        for (x, y) in [(&link.a, &link.b), (&link.b, &link.a)] {
            let ad = new_advert(b, Proto::Ospf, &x.router, &y.router, b.w);
            b.adverts.insert((Proto::Ospf, x.router.clone(), y.router.clone()), ad);
        }
    }
}

fn new_advert(b: &mut Builder, p: Proto, r: &str, n: &str, metric_w: u32) -> Advertisement {
    let tag = match p {
        Proto::Ospf => "ospf",
        Proto::Bgp => "bgp",
    };
    let base = format!("out.{tag}({r}->{n})");
    let valid = b.sys.t().new_bool_var(format!("{base}.valid"));
    let (lo, hi) = b.prefix_vars(&base);
    let metric = b.sys.t().new_int_var(format!("{base}.metric"), metric_w);
    Advertisement { valid, lo, hi, metric }
}

fn encode_bgp_config(b: &mut Builder, routers: &[String]) {
    let net = b.net;
    let topo = &net.topology;
    let bgp: BTreeSet<&String> = routers.iter().filter(|r| net.routers[*r].bgp.is_some()).collect();
    let links: Vec<usize> = (0..topo.links.len())
        .filter(|&l| bgp.contains(&topo.links[l].a.router) && bgp.contains(&topo.links[l].b.router))
        .collect();
    let session = |r: &str, far: &crate::netmodel::Endpoint| {
        net.routers[r]
            .bgp
            .as_ref()
            .and_then(|p| p.neighbor(&far.router))
            .filter(|n| n.iface == far.iface)
            .map(|n| n.span.clone())
    };
    let adj_used = bgp.iter().any(|r| !net.routers[*r].bgp.as_ref().unwrap().neighbors.is_empty());
    for &l in &links {
        let link = &topo.links[l];
        let adj = if adj_used {
            let name = link.name();
            let mut spans = Vec::new();
            let mut omissions = Vec::new();
            for (x, y) in [(&link.a, &link.b), (&link.b, &link.a)] {
                match session(&x.router, y) {
                    Some(s) => spans.push(s),
                    None => omissions.push(Omission {
                        router: x.router.clone(),
                        kind: ConfigKind::BgpAdjacency,
                        site: name.clone(),
                        suggestion: format!("router bgp: neighbor {} interface {}", y.router, y.iface),
                    }),
                }
            }
            let v = b.sys.t().new_bool_var(format!("bgpAdj({name})"));
            let val = b.sys.t().bool_const(omissions.is_empty());
            let bind = b.sys.t().iff(v, val);
            b.config(ConfigKind::BgpAdjacency, &link.a.router, name, vec![v], bind, spans, omissions);
            v
        } else {
            b.sys.t().ff()
        };
        b.adj.insert((Proto::Bgp, l), adj);
        for (x, y) in [(&link.a, &link.b), (&link.b, &link.a)] {
            let ad = new_advert(b, Proto::Bgp, &x.router, &y.router, PATH_W);
            b.adverts.insert((Proto::Bgp, x.router.clone(), y.router.clone()), ad);
        }
    }

    let filters_used = bgp
        .iter()
        .any(|r| net.routers[*r].bgp.as_ref().unwrap().filters.values().any(|v| !v.is_empty()));
    if filters_used {
        for &l in &links {
            let link = &topo.links[l];
            for (x, y) in [(&link.a, &link.b), (&link.b, &link.a)] {
                let (r, n) = (&x.router, &y.router);
                let rules = net.routers[r].bgp.as_ref().unwrap().filters.get(n).cloned().unwrap_or_default();
                let ad = b.adverts[&(Proto::Bgp, r.clone(), n.clone())];
                let v = b.sys.t().new_bool_var(format!("filter({r}->{n})"));
                let (f, spans, om) = if rules.is_empty() {
                    (
                        b.sys.t().tt(),
                        vec![],
                        vec![Omission {
                            router: r.clone(),
                            kind: ConfigKind::RouteFilter,
                            site: n.clone(),
                            suggestion: format!("router bgp: filter out {n} <rules>"),
                        }],
                    )
                } else {
                    let f = b.filter_formula(&rules, ad.lo, ad.hi);
                    (f, rules.iter().map(|x| x.span.clone()).collect(), vec![])
                };
                let bind = b.sys.t().iff(v, f);
                b.config(ConfigKind::RouteFilter, r, n.clone(), vec![v], bind, spans, om);
                b.filters.insert((r.clone(), n.clone()), v);
            }
        }
    }

    let orig_used = bgp.iter().any(|r| !net.routers[*r].bgp.as_ref().unwrap().networks.is_empty());
    if !orig_used {
        return;
    }
    for r in &bgp {
        let cfg = &net.routers[*r];
        let proc_ = cfg.bgp.as_ref().unwrap();
        let mut sites: Vec<(Prefix, Option<Span>)> = proc_.networks.iter().map(|n| (n.value, Some(n.span.clone()))).collect();
        let links_here = link_ifaces(net, r);
        for i in &cfg.interfaces {
            if links_here.contains(&i.name) {
                continue;
            }
            if let Some(p) = i.prefix() {
                if !proc_.networks.iter().any(|n| n.value.covers(p)) {
                    sites.push((p, None));
                }
            }
        }
        let mut out = Vec::new();
        for (p, span) in sites {
            let key = p.to_string();
            let (lo, hi) = b.prefix_vars(&format!("bgpOrig({r}:{key})"));
            let present = span.is_some();
            let bind = b.bind_prefix(lo, hi, if present { Some(p) } else { None });
            let (spans, om) = match span {
                Some(s) => (vec![s], vec![]),
                None => (
                    vec![],
                    vec![Omission {
                        router: r.to_string(),
                        kind: ConfigKind::BgpOriginate,
                        site: key.clone(),
                        suggestion: format!("router bgp: network {p}"),
                    }],
                ),
            };
            b.config(ConfigKind::BgpOriginate, r, key.clone(), vec![lo, hi], bind, spans, om);
            out.push(Site { lo, hi });
        }
        b.origins.insert((Proto::Bgp, r.to_string()), out);
    }
}

fn encode_static_config(b: &mut Builder, routers: &[String]) {
    let net = b.net;
    for r in routers {
        let cfg = &net.routers[r];
        if cfg.statics.is_empty() {
            continue;
        }
        let mut sites: Vec<(String, Option<(Prefix, Span)>)> =
            cfg.statics.iter().map(|s| (s.next_hop.clone(), Some((s.prefix, s.span.clone())))).collect();
        for (n, _) in net.topology.neighbors(r) {
            if !cfg.statics.iter().any(|s| s.next_hop == n) {
                sites.push((n, None));
            }
        }
        // Stable by next hop, config order within one next hop.
        sites.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = Vec::new();
        for (n, st) in sites {
            let site = match &st {
                Some((p, _)) => format!("{p} via {n}"),
                None => format!("via {n}"),
            };
            let (lo, hi) = b.prefix_vars(&format!("static({r}:{site})"));
            let bind = b.bind_prefix(lo, hi, st.as_ref().map(|x| x.0));
            let (spans, om) = match st {
                Some((_, s)) => (vec![s], vec![]),
                None => (
                    vec![],
                    vec![Omission {
                        router: r.clone(),
                        kind: ConfigKind::StaticRoute,
                        site: site.clone(),
                        suggestion: format!("ip route <prefix> next-hop {n}"),
                    }],
                ),
            };
            b.config(ConfigKind::StaticRoute, r, site, vec![lo, hi], bind, spans, om);
            out.push(StaticSite { next_hop: n, lo, hi });
        }
        b.statics.insert(r.clone(), out);
    }
}

/// Imports, best route and exports of `p` at `r`. Returns the origin test and
/// the best route, or `None` if `r` does not run `p`.
fn encode_protocol(b: &mut Builder, r: &str, p: Proto) -> Option<(TermId, Best)> {
    let net = b.net;
    let cfg = &net.routers[r];
    let enabled = match p {
        Proto::Ospf => cfg.ospf.is_some(),
        Proto::Bgp => cfg.bgp.is_some(),
    };
    if !enabled {
        return None;
    }
    let topo = &net.topology;
    let mut parts = Vec::new();

    let mut imports = Vec::new();
    for (n, l) in topo.neighbors(r) {
        let Some(&out) = b.adverts.get(&(p, n.clone(), r.to_string())) else {
            continue;
        };
        let adj = b.adj[&(p, l)];
        let valid = b.sys.t().and([out.valid, b.up[l], adj]);
        imports.push(Import {
            neighbor: n,
            valid,
            metric: out.metric,
            lo: out.lo,
            hi: out.hi,
        });
    }
    let best = select_best(b, &imports);

    let sites = b.origins.remove(&(p, r.to_string())).unwrap_or_default();
    let mut origin = b.sys.t().ff();
    let (mut o_lo, mut o_hi) = match sites.last() {
        Some(s) => (s.lo, s.hi),
        None => (best.lo, best.hi),
    };
    for s in sites.iter().rev() {
        let m = b.member(b.d, s.lo, s.hi);
        origin = b.sys.t().or2(m, origin);
        o_lo = b.sys.t().ite(m, s.lo, o_lo);
        o_hi = b.sys.t().ite(m, s.hi, o_hi);
    }

    let has = b.sys.t().or2(origin, best.valid);
    let pfx_lo = b.sys.t().ite(origin, o_lo, best.lo);
    let pfx_hi = b.sys.t().ite(origin, o_hi, best.hi);
    for (n, l) in topo.neighbors(r) {
        let Some(&out) = b.adverts.get(&(p, r.to_string(), n.clone())) else {
            continue;
        };
        let (near, _) = topo.links[l].oriented(r).unwrap();
        let near = near.iface.clone();
        let metric = match p {
            Proto::Ospf => {
                let c = b.cost[&(r.to_string(), near)];
                let sum = b.sys.t().add(best.metric, c);
                b.sys.t().ite(origin, c, sum)
            }
            Proto::Bgp => {
                let one = b.lconst(1, PATH_W);
                let inc = b.sys.t().add_const(best.metric, 1);
                b.sys.t().ite(origin, one, inc)
            }
        };
        let mut conds = vec![b.adj[&(p, l)], has];
        if let Some(&f) = b.filters.get(&(r.to_string(), n.clone())) {
            if p == Proto::Bgp {
                conds.push(f);
            }
        }
        let valid_def = b.sys.t().and(conds);
        parts.push(b.sys.t().iff(out.valid, valid_def));
        let e_lo = b.sys.t().eq(out.lo, pfx_lo);
        let e_hi = b.sys.t().eq(out.hi, pfx_hi);
        let e_pfx = b.sys.t().and2(e_lo, e_hi);
        parts.push(b.sys.t().implies(has, e_pfx));
        let e_m = b.sys.t().eq(out.metric, metric);
        parts.push(b.sys.t().implies(out.valid, e_m));
    }
    let tag = match p {
        Proto::Ospf => "OSPF",
        Proto::Bgp => "BGP",
    };
    b.logic(format!("{r}: {tag} import/export"), parts);
    Some((origin, best))
}

/// Lowest metric among valid imports; ties go to the earlier (lower-named)
/// neighbor.
fn select_best(b: &mut Builder, imports: &[Import]) -> Best {
    let zero_m = b.lconst(0, 1);
    let zero = b.lconst(0, PREFIX_W);
    let t = b.sys.t();
    let mut sel = BTreeMap::new();
    let mut sels = Vec::new();
    for (j, a) in imports.iter().enumerate() {
        let mut conj = vec![a.valid];
        for (k, c) in imports.iter().enumerate() {
            if k == j {
                continue;
            }
            let beats = if j < k { t.ule(a.metric, c.metric) } else { t.ult(a.metric, c.metric) };
            conj.push(t.implies(c.valid, beats));
        }
        let s = t.and(conj);
        sel.insert(a.neighbor.clone(), s);
        sels.push(s);
    }
    let valid = t.or(imports.iter().map(|a| a.valid).collect::<Vec<_>>());
    let (metric, lo, hi) = match imports.last() {
        None => (zero_m, zero, zero),
        Some(last) => {
            let (mut m, mut lo, mut hi) = (last.metric, last.lo, last.hi);
            for (a, &s) in imports.iter().zip(&sels).rev().skip(1) {
                m = t.ite(s, a.metric, m);
                lo = t.ite(s, a.lo, lo);
                hi = t.ite(s, a.hi, hi);
            }
            (m, lo, hi)
        }
    };
    Best { valid, sel, metric, lo, hi }
}
