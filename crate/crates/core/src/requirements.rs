//! Reachability and isolation requirements between subnets.

use serde::{Deserialize, Serialize};

use crate::netmodel::{Prefix, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Reachable,
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Requirement {
    pub id: String,
    pub kind: Kind,
    pub src: String,
    pub dst: String,
    #[serde(rename = "maxFailures")]
    pub max_failures: usize,
}

/// Source and destination prefixes of the traffic a requirement talks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrafficClass {
    pub src: Prefix,
    pub dst: Prefix,
}

impl TrafficClass {
    /// The concrete packet addresses used for the class: each subnet's
    /// network address.
    pub fn src_addr(&self) -> u32 {
        self.src.addr()
    }

    pub fn dst_addr(&self) -> u32 {
        self.dst.addr()
    }
}

impl Requirement {
    pub fn traffic_class(&self, topo: &Topology) -> TrafficClass {
        TrafficClass {
            src: topo.subnets[&self.src].prefix,
            dst: topo.subnets[&self.dst].prefix,
        }
    }

    pub fn with_max_failures(&self, k: usize) -> Requirement {
        Requirement {
            max_failures: k,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequirementError {
    #[error("requirements JSON: {0}")]
    Json(String),
    #[error("requirement `{id}`: unknown subnet `{subnet}`")]
    UnknownSubnet { id: String, subnet: String },
    #[error("requirement `{id}`: source and destination are both `{subnet}`")]
    SameSubnet { id: String, subnet: String },
    #[error("requirement `{id}`: maxFailures {k} exceeds the {links} links in the topology")]
    TooManyFailures { id: String, k: usize, links: usize },
    #[error("requirement `{id}`: give either src/dst or pairwise")]
    Shape { id: String },
    #[error("duplicate requirement id `{0}`")]
    DuplicateId(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    id: String,
    kind: Kind,
    src: Option<String>,
    dst: Option<String>,
    pairwise: Option<Vec<String>>,
    #[serde(rename = "maxFailures", default)]
    max_failures: usize,
}

/// Parses a JSON array of requirements. An entry with `pairwise: [a, b, c]`
/// expands to one requirement per ordered pair, with ids `ID:a->b`.
pub fn parse_requirements(doc: &str, topo: &Topology) -> Result<Vec<Requirement>, RequirementError> {
    let docs: Vec<Doc> = serde_json::from_str(doc).map_err(|e| RequirementError::Json(e.to_string()))?;
    let mut out: Vec<Requirement> = Vec::new();
    for d in docs {
        let pairs: Vec<(String, String, String)> = match (&d.src, &d.dst, &d.pairwise) {
            (Some(s), Some(t), None) => vec![(d.id.clone(), s.clone(), t.clone())],
            (None, None, Some(list)) => {
                let mut v = Vec::new();
                for a in list {
                    for b in list {
                        if a != b {
                            v.push((format!("{}:{a}->{b}", d.id), a.clone(), b.clone()));
                        }
                    }
                }
                v
            }
            _ => return Err(RequirementError::Shape { id: d.id }),
        };
        for (id, src, dst) in pairs {
            let r = Requirement {
                id,
                kind: d.kind,
                src,
                dst,
                max_failures: d.max_failures,
            };
            check(&r, topo)?;
            if out.iter().any(|o| o.id == r.id) {
                return Err(RequirementError::DuplicateId(r.id));
            }
            out.push(r);
        }
    }
    Ok(out)
}

pub fn check(r: &Requirement, topo: &Topology) -> Result<(), RequirementError> {
    for s in [&r.src, &r.dst] {
        if !topo.subnets.contains_key(s) {
            return Err(RequirementError::UnknownSubnet {
                id: r.id.clone(),
                subnet: s.clone(),
            });
        }
    }
    if r.src == r.dst {
        return Err(RequirementError::SameSubnet {
            id: r.id.clone(),
            subnet: r.src.clone(),
        });
    }
    if r.max_failures > topo.links.len() {
        return Err(RequirementError::TooManyFailures {
            id: r.id.clone(),
            k: r.max_failures,
            links: topo.links.len(),
        });
    }
    Ok(())
}

/// Serializes requirements in the form accepted by [`parse_requirements`].
pub fn to_json(reqs: &[Requirement]) -> String {
    serde_json::to_string_pretty(reqs).expect("requirements serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::parse_topology;

    fn topo() -> Topology {
        parse_topology(
            r#"{"routers": ["r1","r2","r3"],
                "links": [["r1.e2","r2.e1"],["r2.e3","r3.e2"],["r1.e3","r3.e1"]],
                "subnets": {"S": {"prefix": "1.0.1.0/24", "attach": "r1.s"},
                            "T": {"prefix": "1.0.3.0/24", "attach": "r3.t"},
                            "U": {"prefix": "1.0.4.0/24", "attach": "r2.u"}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn single_requirement() {
        let r = parse_requirements(r#"[{"id":"FR","kind":"reachable","src":"S","dst":"T","maxFailures":1}]"#, &topo()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, Kind::Reachable);
        assert_eq!(r[0].max_failures, 1);
        assert_eq!(r[0].traffic_class(&topo()).dst.to_string(), "1.0.3.0/24");
    }

    #[test]
    fn unknown_subnet_and_budget_errors() {
        let e = parse_requirements(r#"[{"id":"x","kind":"blocked","src":"S","dst":"X","maxFailures":0}]"#, &topo());
        assert!(matches!(e, Err(RequirementError::UnknownSubnet { .. })));
        let e = parse_requirements(r#"[{"id":"x","kind":"blocked","src":"S","dst":"T","maxFailures":4}]"#, &topo());
        assert!(matches!(e, Err(RequirementError::TooManyFailures { .. })));
    }

    #[test]
    fn pairwise_expands_ordered_pairs() {
        let r = parse_requirements(r#"[{"id":"FR2","kind":"reachable","pairwise":["S","T","U"],"maxFailures":1}]"#, &topo()).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r[0].id, "FR2:S->T");
    }

    #[test]
    fn json_roundtrip() {
        let r = parse_requirements(r#"[{"id":"a","kind":"blocked","src":"T","dst":"S","maxFailures":2}]"#, &topo()).unwrap();
        assert_eq!(parse_requirements(&to_json(&r), &topo()).unwrap(), r);
    }
}
