//! Merging correction sets across requirements and scenarios, ranking them and
//! rendering the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::encoder::{ConfigKey, ConfigVar, Omission};
use crate::netmodel::Span;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RankMode {
    Smallest,
    ThreeSmallest,
    Intersect,
    All,
}

impl FromStr for RankMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smallest" => Ok(RankMode::Smallest),
            "three" => Ok(RankMode::ThreeSmallest),
            "intersect" => Ok(RankMode::Intersect),
            "all" => Ok(RankMode::All),
            _ => Err(format!("unknown rank mode `{s}`")),
        }
    }
}

impl RankMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RankMode::Smallest => "smallest",
            RankMode::ThreeSmallest => "three",
            RankMode::Intersect => "intersect",
            RankMode::All => "all",
        }
    }
}

/// One configuration variable of a correction set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Segment {
    pub key: ConfigKey,
    pub spans: Vec<Span>,
    pub omissions: Vec<Omission>,
}

impl Segment {
    pub fn of(var: &ConfigVar) -> Segment {
        Segment {
            key: var.key.clone(),
            spans: var.spans.clone(),
            omissions: var.omissions.clone(),
        }
    }

    fn sort_key(&self) -> (String, String, usize) {
        match self.spans.first() {
            Some(s) => (self.key.router.clone(), s.file.clone(), s.start),
            None => (self.key.router.clone(), String::new(), 0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ScenarioRef {
    pub requirement: String,
    pub id: usize,
    #[serde(rename = "failedLinks")]
    pub failed_links: Vec<String>,
}

/// A certified correction set mapped to configuration segments.
#[derive(Clone, Debug)]
pub struct Correction {
    pub segments: Vec<Segment>,
    pub scenario: ScenarioRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioSummary {
    pub id: usize,
    #[serde(rename = "failedLinks")]
    pub failed_links: Vec<String>,
    /// Failure assignments sharing this scenario's forwarding behaviour.
    pub members: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RequirementOutcome {
    pub id: String,
    pub violated: bool,
    /// Scenario search finished and every scenario's enumeration finished.
    pub complete: bool,
    pub scenarios: Vec<ScenarioSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub rank: usize,
    pub segments: Vec<Segment>,
    pub requirements: Vec<String>,
    pub scenarios: Vec<ScenarioRef>,
}

impl Finding {
    pub fn mcs_size(&self) -> usize {
        self.segments.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &ConfigKey> {
        self.segments.iter().map(|s| &s.key)
    }

    pub fn spans(&self) -> impl Iterator<Item = &Span> {
        self.segments.iter().flat_map(|s| s.spans.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub mode: RankMode,
    pub requirements: Vec<RequirementOutcome>,
    pub findings: Vec<Finding>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn compliant(&self) -> bool {
        self.requirements.iter().all(|r| !r.violated)
    }

    pub fn complete(&self) -> bool {
        self.requirements.iter().all(|r| r.complete)
    }

    pub fn status(&self) -> &'static str {
        if self.compliant() {
            "compliant"
        } else {
            "violated"
        }
    }
}

/// Merges correction sets with the same segments, filters them by `mode` and
/// ranks by size (dense, 1 = smallest).
pub fn aggregate_and_rank(corrections: &[Correction], requirements: Vec<RequirementOutcome>, mode: RankMode) -> Report {
    let mut merged: BTreeMap<Vec<Segment>, (BTreeSet<String>, BTreeSet<ScenarioRef>)> = BTreeMap::new();
    for c in corrections {
        let mut segs = c.segments.clone();
        segs.sort();
        segs.dedup();
        let e = merged.entry(segs).or_default();
        e.0.insert(c.scenario.requirement.clone());
        e.1.insert(c.scenario.clone());
    }
    let mut warnings = Vec::new();
    let violated: BTreeSet<&str> = requirements.iter().filter(|r| r.violated).map(|r| r.id.as_str()).collect();
    let mut mode_used = mode;
    if mode == RankMode::Intersect && violated.len() < 2 {
        warnings.push("intersect needs two or more violated requirements; reporting all correction sets".to_string());
        mode_used = RankMode::All;
    }
    let sizes: BTreeSet<usize> = merged.keys().map(|k| k.len()).collect();
    let keep_sizes: BTreeSet<usize> = match mode_used {
        RankMode::Smallest => sizes.iter().take(1).copied().collect(),
        RankMode::ThreeSmallest => sizes.iter().take(3).copied().collect(),
        RankMode::Intersect | RankMode::All => sizes.clone(),
    };
    let mut findings: Vec<Finding> = merged
        .into_iter()
        .filter(|(segs, _)| keep_sizes.contains(&segs.len()))
        .filter(|(_, (reqs, _))| mode_used != RankMode::Intersect || violated.iter().all(|v| reqs.contains(*v)))
        .map(|(segments, (reqs, scen))| Finding {
            rank: 0,
            segments,
            requirements: reqs.into_iter().collect(),
            scenarios: scen.into_iter().collect(),
        })
        .collect();
    findings.sort_by(|a, b| {
        let ka: Vec<_> = a.segments.iter().map(Segment::sort_key).collect();
        let kb: Vec<_> = b.segments.iter().map(Segment::sort_key).collect();
        (a.mcs_size(), ka, &a.segments).cmp(&(b.mcs_size(), kb, &b.segments))
    });
    let ranks: BTreeMap<usize, usize> = findings
        .iter()
        .map(|f| f.mcs_size())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, i + 1))
        .collect();
    for f in &mut findings {
        f.rank = ranks[&f.mcs_size()];
    }
    Report {
        mode,
        requirements,
        findings,
        warnings,
    }
}

fn segment_json(s: &Segment) -> (Vec<Value>, Vec<Value>) {
    let spans = s
        .spans
        .iter()
        .map(|sp| {
            json!({
                "type": "present",
                "file": sp.file,
                "line": sp.start,
                "endLine": sp.end,
                "router": s.key.router,
                "kind": s.key.kind.to_string(),
                "site": s.key.site,
            })
        })
        .collect();
    let omissions = s
        .omissions
        .iter()
        .map(|o| {
            json!({
                "type": "absent",
                "router": o.router,
                "kind": o.kind.to_string(),
                "site": o.site,
                "suggestion": o.suggestion,
            })
        })
        .collect();
    (spans, omissions)
}

pub fn to_json(report: &Report) -> Value {
    let findings: Vec<Value> = report
        .findings
        .iter()
        .map(|f| {
            let (mut spans, mut omissions) = (Vec::new(), Vec::new());
            for s in &f.segments {
                let (a, b) = segment_json(s);
                spans.extend(a);
                omissions.extend(b);
            }
            json!({
                "rank": f.rank,
                "mcsSize": f.mcs_size(),
                "segments": f.segments.iter().map(|s| s.key.to_string()).collect::<Vec<_>>(),
                "spans": spans,
                "omissions": omissions,
                "requirements": f.requirements,
                "scenarios": f.scenarios,
            })
        })
        .collect();
    json!({
        "version": REPORT_VERSION,
        "status": report.status(),
        "complete": report.complete(),
        "rankMode": report.mode.as_str(),
        "requirements": report.requirements,
        "findings": findings,
        "warnings": report.warnings,
    })
}

pub fn emit_json(report: &Report) -> String {
    serde_json::to_string_pretty(&to_json(report)).expect("report serializes")
}

/// Human-readable report. `sources` maps file names to their text and is used
/// for excerpts; missing files just omit the excerpt.
pub fn emit_text(report: &Report, sources: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", report.status());
    if !report.complete() {
        let _ = writeln!(s, "note: search budget ran out; results may be partial");
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    for r in &report.requirements {
        if !r.violated {
            let _ = writeln!(s, "requirement {}: ok", r.id);
            continue;
        }
        let _ = writeln!(s, "requirement {}: violated in {} scenario class(es)", r.id, r.scenarios.len());
        for sc in &r.scenarios {
            let links = if sc.failed_links.is_empty() {
                "no failures".to_string()
            } else {
                format!("failed {}", sc.failed_links.join(", "))
            };
            let _ = writeln!(s, "  scenario {}: {links} ({} assignment(s))", sc.id, sc.members);
        }
    }
    for f in &report.findings {
        let _ = writeln!(
            s,
            "\n#{} (size {}) for {}",
            f.rank,
            f.mcs_size(),
            f.requirements.join(", ")
        );
        for seg in &f.segments {
            let _ = writeln!(s, "  {}", seg.key);
            for sp in &seg.spans {
                let _ = writeln!(s, "    {sp}");
                if let Some(text) = sources.get(&sp.file) {
                    for (i, line) in text.lines().enumerate().skip(sp.start - 1).take(sp.end + 1 - sp.start) {
                        let _ = writeln!(s, "      {:>4} | {line}", i + 1);
                    }
                }
            }
            for o in &seg.omissions {
                let _ = writeln!(s, "    absent on {}: {}", o.router, o.suggestion);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::ConfigKind;

    fn seg(router: &str, line: usize) -> Segment {
        Segment {
            key: ConfigKey {
                kind: ConfigKind::AclDef,
                router: router.into(),
                site: format!("acl{line}"),
            },
            spans: vec![Span::line(&format!("{router}.cfg"), line)],
            omissions: vec![],
        }
    }

    fn corr(req: &str, segs: &[Segment]) -> Correction {
        Correction {
            segments: segs.to_vec(),
            scenario: ScenarioRef {
                requirement: req.into(),
                id: 0,
                failed_links: vec![],
            },
        }
    }

    fn outcome(id: &str) -> RequirementOutcome {
        RequirementOutcome {
            id: id.into(),
            violated: true,
            complete: true,
            scenarios: vec![],
        }
    }

    fn sizes(r: &Report) -> Vec<usize> {
        r.findings.iter().map(|f| f.mcs_size()).collect()
    }

    fn sized() -> Vec<Correction> {
        let s: Vec<Segment> = (1..=20).map(|i| seg("r1", i)).collect();
        vec![
            corr("a", &s[0..1]),
            corr("a", &s[1..2]),
            corr("a", &s[2..4]),
            corr("a", &s[4..7]),
            corr("a", &s[7..10]),
            corr("a", &s[10..15]),
        ]
    }

    #[test]
    fn smallest_and_three_smallest() {
        let r = aggregate_and_rank(&sized(), vec![outcome("a")], RankMode::Smallest);
        assert_eq!(sizes(&r), [1, 1]);
        let r = aggregate_and_rank(&sized(), vec![outcome("a")], RankMode::ThreeSmallest);
        assert_eq!(sizes(&r), [1, 1, 2, 3, 3]);
        assert_eq!(r.findings.iter().map(|f| f.rank).collect::<Vec<_>>(), [1, 1, 2, 3, 3]);
        let r = aggregate_and_rank(&sized(), vec![outcome("a")], RankMode::All);
        assert_eq!(sizes(&r), [1, 1, 2, 3, 3, 5]);
    }

    #[test]
    fn intersect_keeps_common_sets() {
        let (a, b, c) = (seg("r1", 1), seg("r2", 1), seg("r3", 1));
        let cs = [corr("x", &[a.clone()]), corr("x", &[b.clone()]), corr("y", &[b.clone()]), corr("y", &[c])];
        let r = aggregate_and_rank(&cs, vec![outcome("x"), outcome("y")], RankMode::Intersect);
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].segments, vec![b]);
        assert_eq!(r.findings[0].requirements, ["x", "y"]);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn intersect_with_one_requirement_falls_back() {
        let r = aggregate_and_rank(&sized(), vec![outcome("a")], RankMode::Intersect);
        assert_eq!(r.findings.len(), 6);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn duplicate_sets_merge_scenarios() {
        let a = seg("r1", 3);
        let mut c2 = corr("x", &[a.clone()]);
        c2.scenario.id = 1;
        let r = aggregate_and_rank(&[corr("x", &[a]), c2], vec![outcome("x")], RankMode::All);
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].scenarios.len(), 2);
    }

    #[test]
    fn ties_break_on_router_then_line() {
        let cs = [corr("x", &[seg("r2", 1)]), corr("x", &[seg("r1", 9)]), corr("x", &[seg("r1", 2)])];
        let r = aggregate_and_rank(&cs, vec![outcome("x")], RankMode::All);
        let order: Vec<String> = r.findings.iter().map(|f| f.spans().next().unwrap().to_string()).collect();
        assert_eq!(order, ["r1.cfg:2", "r1.cfg:9", "r2.cfg:1"]);
    }

    #[test]
    fn compliant_json() {
        let mut o = outcome("a");
        o.violated = false;
        let r = aggregate_and_rank(&[], vec![o], RankMode::Smallest);
        let v = to_json(&r);
        assert_eq!(v["status"], "compliant");
        assert_eq!(v["findings"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn omission_json_shape() {
        let s = Segment {
            key: ConfigKey {
                kind: ConfigKind::OspfAdjacency,
                router: "r1".into(),
                site: "r1-r2".into(),
            },
            spans: vec![],
            omissions: vec![Omission {
                router: "r1".into(),
                kind: ConfigKind::OspfAdjacency,
                site: "r1-r2".into(),
                suggestion: "router ospf: network 10.0.12.0/24".into(),
            }],
        };
        let r = aggregate_and_rank(&[corr("x", &[s])], vec![outcome("x")], RankMode::All);
        let v = to_json(&r);
        let o = &v["findings"][0]["omissions"][0];
        assert_eq!(o["type"], "absent");
        assert_eq!(o["router"], "r1");
        assert_eq!(o["kind"], "OspfAdjacency");
        assert!(emit_text(&r, &BTreeMap::new()).contains("absent on r1"));
    }
}
