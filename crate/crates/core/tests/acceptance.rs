//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use cfgloc::encoder::{encode, ConfigKey, ConfigKind};
use cfgloc::failures::{enumerate_violating_scenarios, pin_scenario, ExploreOptions};
use cfgloc::harness::bench::{mean_precision, injection_suite, Trial};
use cfgloc::harness::gen::{ring, tree, Shape};
use cfgloc::harness::inject::{inject, ErrorType, TruthItem};
use cfgloc::harness::pipeline::{localize, LocalizeOptions, LocalizeResult};
use cfgloc::harness::score::score;
use cfgloc::harness::{fixture_dir, load_case, Case};
use cfgloc::mcs::{MarcoOptions, MssStrategy, Problem};
use cfgloc::netmodel::Direction;
use cfgloc::report::RankMode;
use cfgloc::solver::{Category, CheckResult, Label, LabelId, System, TermId};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn key(kind: ConfigKind, router: &str, site: &str) -> ConfigKey {
    ConfigKey {
        kind,
        router: router.into(),
        site: site.into(),
    }
}

fn case(name: &str) -> Case {
    load_case(&fixture_dir(name)).expect("fixture loads")
}

fn run(c: &Case, mode: RankMode) -> LocalizeResult {
    let opts = LocalizeOptions {
        rank_mode: mode,
        ..Default::default()
    };
    localize(&c.net, &c.requirements, &opts).expect("localization runs")
}

/// The keys of every smallest finding, one set per finding.
fn smallest(res: &LocalizeResult) -> Vec<Vec<ConfigKey>> {
    res.report.findings.iter().map(|f| f.keys().cloned().collect()).collect()
}

/// Correction sets contain configuration labels only.
fn only_config_labels(name: &str) -> Result<(), String> {
    let c = case(name);
    for req in &c.requirements {
        let mut cs = encode(&c.net, req).map_err(|e| e.to_string())?;
        let ex = enumerate_violating_scenarios(&mut cs, &ExploreOptions::default()).map_err(|e| e.to_string())?;
        for sc in &ex.scenarios {
            let p = pin_scenario(&mut cs, &sc.failed).map_err(|e| e.to_string())?;
            let e = Problem::new(&mut cs.sys, p.hard, p.soft)
                .enumerate_mcses(&MarcoOptions::default())
                .map_err(|e| e.to_string())?;
            for m in e.mcses.iter().flatten() {
                let cat = cs.sys.label(*m).map(|l| l.category);
                ensure(cat == Some(Category::Config), || format!("{name}: label {m} in a correction set is {cat:?}"))?;
            }
        }
    }
    Ok(())
}

fn static_chain() -> Outcome {
    let c = case("static_chain");
    let res = run(&c, RankMode::Smallest);
    let r = &res.report.requirements[0];
    ensure(r.violated && r.scenarios.len() == 1 && r.scenarios[0].failed_links.is_empty(), || format!("{r:?}"))?;
    let allowed = [key(ConfigKind::AclUseOut, "r1", "e2"), key(ConfigKind::AclDef, "r1", "blockT")];
    let s = smallest(&res);
    ensure(!s.is_empty() && s.iter().all(|m| m.len() == 1 && allowed.contains(&m[0])), || format!("smallest {s:?}"))?;
    only_config_labels("static_chain")?;
    Ok(format!("{} smallest correction set(s), all the r1 ACL binding", s.len()))
}

fn triangle_acl() -> Outcome {
    let c = case("triangle_acl");
    let res = run(&c, RankMode::Smallest);
    let r = &res.report.requirements[0];
    ensure(r.scenarios.len() == 1 && r.scenarios[0].failed_links == ["r1-r3"], || format!("{:?}", r.scenarios))?;
    let allowed = [key(ConfigKind::AclUseOut, "r2", "e3"), key(ConfigKind::AclDef, "r2", "blockT")];
    let s = smallest(&res);
    ensure(!s.is_empty() && s.iter().all(|m| m.len() == 1 && allowed.contains(&m[0])), || format!("smallest {s:?}"))?;
    only_config_labels("triangle_acl")?;
    Ok("one class {r1-r3}; smallest is the r2 ACL".into())
}

fn triangle_no_adj() -> Outcome {
    let c = case("triangle_no_adj");
    let res = run(&c, RankMode::Smallest);
    let r = &res.report.requirements[0];
    ensure(r.scenarios.len() == 1 && r.scenarios[0].failed_links == ["r1-r3"], || format!("{:?}", r.scenarios))?;
    let f = &res.report.findings;
    ensure(f.len() == 1 && f[0].segments.len() == 1, || format!("{} findings", f.len()))?;
    let seg = &f[0].segments[0];
    ensure(seg.key == key(ConfigKind::OspfAdjacency, "r1", "r1-r2") && seg.spans.is_empty(), || format!("{:?}", seg.key))?;
    Ok("absent OspfAdjacency r1-r2".into())
}

fn campus_errors() -> Outcome {
    let c = case("campus_errors");
    let res = run(&c, RankMode::Smallest);
    let def_span = |r: &str, acl: &str| c.net.routers[r].acls[acl].span();
    let use_span = |r: &str, i: &str| c.net.routers[r].interface(i).unwrap().acl(Direction::Out).unwrap().span.clone();
    let edge_err = TruthItem {
        keys: vec![key(ConfigKind::AclDef, "edge", "edgeFilter"), key(ConfigKind::AclUseOut, "edge", "core1")],
        spans: vec![def_span("edge", "edgeFilter"), use_span("edge", "core1")],
    };
    let dept_err = TruthItem {
        keys: vec![
            key(ConfigKind::AclDef, "core2", "deptFilter"),
            key(ConfigKind::AclDef, "core3", "deptFilter"),
            key(ConfigKind::AclUseOut, "core2", "core3"),
            key(ConfigKind::AclUseOut, "core3", "core2"),
        ],
        spans: vec![
            def_span("core2", "deptFilter"),
            def_span("core3", "deptFilter"),
            use_span("core2", "core3"),
            use_span("core3", "core2"),
        ],
    };
    for (name, t) in [("edge filter", &edge_err), ("dept filter", &dept_err)] {
        let spans_only = TruthItem {
            keys: vec![],
            spans: t.spans.clone(),
        };
        let s = score(&res.report, std::slice::from_ref(&spans_only));
        ensure(s.recall == 1.0, || format!("{name} span not hit"))?;
    }
    let s = score(&res.report, &[edge_err, dept_err]);
    Ok(format!("both localized; precision {:.2}", s.precision.unwrap_or(0.0)))
}

/// Random clause over `vars` variables, as a term and as a truth-table mask.
fn random_clause(rng: &mut Xoshiro256StarStar, s: &mut System, xs: &[TermId], vars: usize) -> (TermId, u64) {
    let width = 1 + (rng.next_u64() % 3) as usize;
    let mut lits = Vec::new();
    let mut mask = 0u64;
    let mut picks = Vec::new();
    for _ in 0..width {
        let v = (rng.next_u64() % vars as u64) as usize;
        let pos = rng.next_u64() % 2 == 0;
        picks.push((v, pos));
        lits.push(if pos { xs[v] } else { s.t().not(xs[v]) });
    }
    for a in 0..(1u64 << vars) {
        if picks.iter().any(|&(v, pos)| ((a >> v) & 1 == 1) == pos) {
            mask |= 1 << a;
        }
    }
    (s.t().or(lits), mask)
}

/// Every MSS complement and every MUS of the soft masks, by subset enumeration.
fn brute_force(hard: u64, soft: &[u64]) -> (BTreeSet<Vec<usize>>, BTreeSet<Vec<usize>>) {
    let n = soft.len();
    let mut sat = vec![0u64; 1 << n];
    sat[0] = hard;
    for m in 1..(1usize << n) {
        let low = m.trailing_zeros() as usize;
        sat[m] = sat[m & (m - 1)] & soft[low];
    }
    let members = |m: usize| (0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>();
    let mut mcses = BTreeSet::new();
    let mut muses = BTreeSet::new();
    for m in 0..(1usize << n) {
        if sat[m] != 0 {
            if (0..n).all(|i| m >> i & 1 == 1 || sat[m | 1 << i] == 0) {
                mcses.insert(members(!m & ((1 << n) - 1)));
            }
        } else if (0..n).all(|i| m >> i & 1 == 0 || sat[m & !(1 << i)] != 0) {
            muses.insert(members(m));
        }
    }
    (mcses, muses)
}

fn mcs_oracle() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(5);
    let mut done = 0;
    let mut attempts = 0;
    let mut total = 0;
    while done < 60 {
        attempts += 1;
        ensure(attempts < 10_000, || "could not generate unsatisfiable systems".into())?;
        let vars = 2 + (rng.next_u64() % 5) as usize;
        let n = 3 + (rng.next_u64() % 16) as usize;
        let mut s = System::new();
        let xs: Vec<TermId> = (0..vars).map(|i| s.t().new_bool_var(format!("x{i}"))).collect();
        let (h, hmask) = random_clause(&mut rng, &mut s, &xs, vars);
        let mut masks = Vec::new();
        s.assert_labeled(h, Label::new(0, Category::Logic, "hard")).unwrap();
        for i in 0..n {
            let (f, m) = random_clause(&mut rng, &mut s, &xs, vars);
            masks.push(m);
            s.assert_labeled(f, Label::new(i as LabelId + 1, Category::Config, "")).unwrap();
        }
        let full = (1u128 << (1 << vars)) - 1;
        let hmask = hmask & full as u64;
        if masks.iter().fold(hmask, |a, m| a & m) != 0 {
            continue;
        }
        let (want, muses) = brute_force(hmask, &masks);
        let to_labels = |v: &Vec<usize>| v.iter().map(|&i| i as LabelId + 1).collect::<Vec<_>>();
        let want: Vec<Vec<LabelId>> = want.iter().map(to_labels).collect();
        let want_mus: Vec<Vec<LabelId>> = muses.iter().map(to_labels).collect();
        let soft: Vec<LabelId> = (1..=n as LabelId).collect();
        let mut p = Problem::new(&mut s, vec![0], soft);
        let opts = MarcoOptions {
            deadline: None,
            maximal_seeds: done % 3 == 0,
            grow: if done % 2 == 0 { MssStrategy::Bisect } else { MssStrategy::Linear },
        };
        let e = p.enumerate_mcses(&opts).map_err(|e| e.to_string())?;
        let mut got = e.mcses.clone();
        got.sort();
        ensure(e.complete && got == want, || format!("fixture {done}: got {got:?}, want {want:?}"))?;
        let mut got_mus = e.muses.clone();
        got_mus.sort();
        ensure(got_mus == want_mus, || format!("fixture {done}: muses {got_mus:?}, want {want_mus:?}"))?;
        for m in &got {
            ensure(p.verify_mcs(m).map_err(|e| e.to_string())?, || format!("fixture {done}: {m:?} fails verification"))?;
            for u in &want_mus {
                ensure(u.iter().any(|l| m.contains(l)), || format!("fixture {done}: {m:?} misses MUS {u:?}"))?;
            }
        }
        total += got.len();
        done += 1;
    }
    Ok(format!("{done} systems, {total} correction sets"))
}

fn equivalence() -> Outcome {
    let mut pairs = 0;
    let mut fixtures = 0;
    for name in ["static_chain", "triangle_acl", "triangle_no_adj", "triangle_inbound_acl", "bgp_pair", "campus", "campus_errors"] {
        let c = case(name);
        if c.net.routers.len() > 6 {
            continue;
        }
        pairs += common::compare_with_simulator(name, &c)?;
        fixtures += 1;
    }
    Ok(format!("{fixtures} fixtures, {pairs} requirement/assignment pairs"))
}

fn acl_trials(trials: &[Trial]) -> Vec<Trial> {
    trials.iter().filter(|t| t.shape == Shape::Campus).cloned().collect()
}

fn recall(trials: &[Trial]) -> Outcome {
    for t in trials {
        let r = t.score(RankMode::Smallest).unwrap().recall;
        let need = if t.shape == Shape::Campus { 0.5 } else { 1.0 };
        ensure(r >= need, || format!("{} {:?} seed {}: recall {r} ({})", t.kind, t.shape, t.seed, t.description))?;
    }
    Ok(format!("{} trials", trials.len()))
}

fn precision(trials: &[Trial]) -> Outcome {
    let acl = acl_trials(trials);
    let m = |mode| mean_precision(&acl, mode).unwrap_or(0.0);
    let (s, t, a) = (m(RankMode::Smallest), m(RankMode::ThreeSmallest), m(RankMode::All));
    ensure(s >= t && s >= a, || format!("smallest {s:.3}, three {t:.3}, all {a:.3}"))?;
    Ok(format!("smallest {s:.3} >= three {t:.3}, all {a:.3}"))
}

fn bisect_vs_linear() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(9);
    let mut notes = Vec::new();
    for n in [64u32, 128, 256] {
        let culprit = 1 + (rng.next_u64() % n as u64) as u32;
        let mut s = System::new();
        let x = s.t().new_bool_var("x");
        s.assert_labeled(x, Label::new(0, Category::Logic, "x")).unwrap();
        let mut prev: Option<TermId> = None;
        for i in 1..=n {
            let f = if i == culprit {
                s.t().not(x)
            } else {
                let v = s.t().new_bool_var(format!("v{i}"));
                match prev.replace(v) {
                    Some(p) => s.t().implies(p, v),
                    None => s.t().or2(x, v),
                }
            };
            s.assert_labeled(f, Label::new(i, Category::Config, "")).unwrap();
        }
        let soft: Vec<LabelId> = (1..=n).collect();
        let mut counts = Vec::new();
        for strategy in [MssStrategy::Linear, MssStrategy::Bisect] {
            let before = s.count_checks();
            let mut p = Problem::new(&mut s, vec![0], soft.clone());
            let m = p.grow_mss(strategy).map_err(|e| e.to_string())?;
            ensure(m == [culprit], || format!("|C|={n} {strategy:?}: {m:?}"))?;
            drop(p);
            counts.push(s.count_checks() - before);
        }
        let with_hard: Vec<LabelId> = soft.iter().copied().chain([0]).collect();
        ensure(!s.check(&with_hard).unwrap().is_sat(), || "system is not unsatisfiable".into())?;
        let others: Vec<LabelId> = soft.iter().copied().filter(|&l| l != culprit).chain([0]).collect();
        ensure(s.check(&others).unwrap().is_sat(), || "culprit is not a correction set".into())?;
        ensure(counts[1] * 4 <= counts[0], || format!("|C|={n}: bisect {} vs linear {}", counts[1], counts[0]))?;
        notes.push(format!("{n}: {}/{}", counts[1], counts[0]));
    }
    Ok(format!("bisect/linear checks {}", notes.join(", ")))
}

fn failure_completeness() -> Outcome {
    let mut cases: Vec<(String, Case)> = ["static_chain", "triangle_acl", "triangle_no_adj", "triangle_inbound_acl", "bgp_pair", "campus", "campus_errors"]
        .iter()
        .map(|n| (n.to_string(), case(n)))
        .collect();
    let r = ring(6);
    let t = tree(3);
    let mut with_error = |name: &str, c: &Case, kind| {
        let inj = inject(&c.net, &c.requirements, kind, 0).unwrap();
        cases.push((name.into(), Case { net: inj.net, ..c.clone() }));
    };
    with_error("ring6+OmitNw", &r, ErrorType::OmitNw);
    with_error("tree3+OmitNb", &t, ErrorType::OmitNb);
    let mut checked = 0;
    for (name, c) in &cases {
        let links = c.net.topology.links.len();
        if links > 10 {
            continue;
        }
        for req in &c.requirements {
            let req = req.with_max_failures(2.min(links));
            let mut want = common::violating(c, &req);
            want.sort();
            for dedup in [true, false] {
                let mut cs = encode(&c.net, &req).map_err(|e| e.to_string())?;
                let ex = enumerate_violating_scenarios(&mut cs, &ExploreOptions { dedup, deadline: None }).map_err(|e| e.to_string())?;
                ensure(ex.complete, || format!("{name} {}: incomplete", req.id))?;
                let mut got: Vec<Vec<bool>> = if dedup {
                    ex.scenarios.iter().flat_map(|s| s.members.iter().cloned()).collect()
                } else {
                    ensure(ex.scenarios.len() == ex.raw.len(), || format!("{name} {}: raw list merged", req.id))?;
                    ex.scenarios.iter().map(|s| s.failed.clone()).collect()
                };
                got.sort();
                ensure(got == want, || format!("{name} {} dedup={dedup}: {} vs {} assignments", req.id, got.len(), want.len()))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} requirements across {} networks", cases.len()))
}

fn sat_fuzz() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(11);
    let (mut sat, mut unsat) = (0, 0);
    for round in 0..10_000 {
        let vars = 1 + (rng.next_u64() % 20) as usize;
        let n = 1 + (rng.next_u64() % (5 * vars as u64)) as usize;
        let mut s = System::new();
        let xs: Vec<TermId> = (0..vars).map(|i| s.t().new_bool_var(format!("x{i}"))).collect();
        let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
        for i in 0..n {
            let width = 1 + (rng.next_u64() % 3) as usize;
            let c: Vec<(usize, bool)> = (0..width).map(|_| ((rng.next_u64() % vars as u64) as usize, rng.next_u64() % 2 == 0)).collect();
            let lits: Vec<TermId> = c.iter().map(|&(v, pos)| if pos { xs[v] } else { s.t().not(xs[v]) }).collect();
            let f = s.t().or(lits);
            s.assert_labeled(f, Label::new(i as LabelId, Category::Config, "")).unwrap();
            clauses.push(c);
        }
        let all: Vec<LabelId> = (0..n as LabelId).collect();
        let truth = satisfiable(vars, &clauses.iter().collect::<Vec<_>>());
        match s.check(&all).map_err(|e| e.to_string())? {
            CheckResult::Sat(m) => {
                ensure(truth, || format!("round {round}: solver says sat, table says unsat"))?;
                let holds = clauses.iter().all(|c| c.iter().any(|&(v, pos)| (s.eval(&m, xs[v]) == 1) == pos));
                ensure(holds, || format!("round {round}: model violates a clause"))?;
                sat += 1;
            }
            CheckResult::Unsat(core) => {
                ensure(!truth, || format!("round {round}: solver says unsat, table says sat"))?;
                let sub: Vec<&Vec<(usize, bool)>> = core.iter().map(|&l| &clauses[l as usize]).collect();
                ensure(!satisfiable(vars, &sub), || format!("round {round}: core {core:?} is satisfiable"))?;
                unsat += 1;
            }
            CheckResult::Timeout => return Err(format!("round {round}: timeout")),
        }
    }
    Ok(format!("{sat} sat, {unsat} unsat"))
}

/// Truth-table satisfiability, 64 assignments per word.
fn satisfiable(vars: usize, clauses: &[&Vec<(usize, bool)>]) -> bool {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let words = 1usize << vars.saturating_sub(6);
    let valid = if vars >= 6 { u64::MAX } else { (1u64 << (1 << vars)) - 1 };
    (0..words).any(|w| {
        let val = |v: usize| -> u64 {
            if v < 6 {
                LOW[v]
            } else if (w >> (v - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            }
        };
        let mut acc = valid;
        for c in clauses {
            let mut cw = 0;
            for &(v, pos) in c.iter() {
                cw |= if pos { val(v) } else { !val(v) };
            }
            acc &= cw;
            if acc == 0 {
                return false;
            }
        }
        acc != 0
    })
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, what: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = f();
        let el = t.elapsed();
        let r = match r {
            Ok(note) if el > limit => Err(format!("{note}; took {el:.1?}, limit {limit:?}")),
            other => other,
        };
        match r {
            Ok(note) => println!("PASS criterion {n}: {what}: {note} ({el:.2?})"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {n}: {what}: {e} ({el:.2?})");
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, "static route fixture", secs(1), &mut static_chain);
    report(2, "ACL under failure", secs(5), &mut triangle_acl);
    report(3, "missing OSPF adjacency", secs(5), &mut triangle_no_adj);
    report(4, "campus with two ACL errors", secs(60), &mut campus_errors);
    report(5, "correction sets match brute force", secs(600), &mut mcs_oracle);
    report(6, "encoder matches simulator", secs(300), &mut equivalence);
    let modes = [RankMode::Smallest, RankMode::ThreeSmallest, RankMode::All];
    let mut trials: Option<Vec<Trial>> = None;
    report(7, "injected error recall", secs(1200), &mut || {
        let ts = injection_suite(&[8], 3, &modes, &LocalizeOptions::default()).map_err(|e| e.to_string())?;
        recall(trials.insert(ts))
    });
    report(8, "precision by rank mode", Duration::MAX, &mut || match &trials {
        Some(ts) => precision(ts),
        None => Err("no trials".into()),
    });
    report(9, "bisect against linear growth", secs(120), &mut bisect_vs_linear);
    report(10, "failure enumeration completeness", secs(300), &mut failure_completeness);
    report(11, "solver fuzz against truth tables", secs(300), &mut sat_fuzz);
    if failed > 0 {
        std::process::exit(1);
    }
}
