use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::prefix::Prefix;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Endpoint {
    pub router: String,
    pub iface: String,
}

impl Endpoint {
    fn parse(s: &str) -> Result<Self, TopologyError> {
        match s.split_once('.') {
            Some((r, i)) if !r.is_empty() && !i.is_empty() => Ok(Endpoint {
                router: r.to_string(),
                iface: i.to_string(),
            }),
            _ => Err(TopologyError::Endpoint(s.to_string())),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.router, self.iface)
    }
}

pub type LinkId = usize;

/// An undirected link; `a` sorts before `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Link {
    pub a: Endpoint,
    pub b: Endpoint,
}

impl Link {
    pub fn new(x: Endpoint, y: Endpoint) -> Self {
        if x <= y {
            Link { a: x, b: y }
        } else {
            Link { a: y, b: x }
        }
    }

    /// `r1-r3` style name; unique because router pairs have at most one link.
    pub fn name(&self) -> String {
        format!("{}-{}", self.a.router, self.b.router)
    }

    pub fn touches(&self, router: &str) -> bool {
        self.a.router == router || self.b.router == router
    }

    /// The endpoint on `router` and the opposite endpoint.
    pub fn oriented(&self, router: &str) -> Option<(&Endpoint, &Endpoint)> {
        if self.a.router == router {
            Some((&self.a, &self.b))
        } else if self.b.router == router {
            Some((&self.b, &self.a))
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subnet {
    pub name: String,
    pub prefix: Prefix,
    pub attach: Endpoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Topology {
    pub routers: Vec<String>,
    /// Interface lists when the document declares them.
    pub interfaces: BTreeMap<String, Vec<String>>,
    pub links: Vec<Link>,
    pub subnets: BTreeMap<String, Subnet>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("topology JSON: {0}")]
    Json(String),
    #[error("malformed endpoint `{0}`, expected ROUTER.IFACE")]
    Endpoint(String),
    #[error("unknown router `{0}`")]
    UnknownRouter(String),
    #[error("unknown interface `{0}`")]
    UnknownInterface(String),
    #[error("self-link on router `{0}`")]
    SelfLink(String),
    #[error("more than one link between `{0}` and `{1}`")]
    DuplicateLink(String, String),
    #[error("interface `{0}` used by more than one link or subnet")]
    EndpointReused(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RoutersDoc {
    List(Vec<String>),
    Map(BTreeMap<String, Vec<String>>),
}

#[derive(Deserialize)]
struct SubnetDoc {
    prefix: Prefix,
    attach: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    routers: RoutersDoc,
    #[serde(default)]
    links: Vec<[String; 2]>,
    #[serde(default)]
    subnets: BTreeMap<String, SubnetDoc>,
}

pub fn parse_topology(doc: &str) -> Result<Topology, TopologyError> {
    let d: TopologyDoc = serde_json::from_str(doc).map_err(|e| TopologyError::Json(e.to_string()))?;
    let mut t = Topology::default();
    match d.routers {
        RoutersDoc::List(rs) => t.routers = rs,
        RoutersDoc::Map(m) => {
            t.routers = m.keys().cloned().collect();
            t.interfaces = m;
        }
    }
    let known: BTreeSet<&String> = t.routers.iter().collect();
    let check = |e: &Endpoint| -> Result<(), TopologyError> {
        if !known.contains(&e.router) {
            return Err(TopologyError::UnknownRouter(e.router.clone()));
        }
        if let Some(ifs) = t.interfaces.get(&e.router) {
            if !ifs.contains(&e.iface) {
                return Err(TopologyError::UnknownInterface(e.to_string()));
            }
        }
        Ok(())
    };
    let mut used = BTreeSet::new();
    let mut pairs = BTreeSet::new();
    let mut links = Vec::new();
    for [x, y] in &d.links {
        let (x, y) = (Endpoint::parse(x)?, Endpoint::parse(y)?);
        check(&x)?;
        check(&y)?;
        if x.router == y.router {
            return Err(TopologyError::SelfLink(x.router));
        }
        for e in [&x, &y] {
            if !used.insert(e.clone()) {
                return Err(TopologyError::EndpointReused(e.to_string()));
            }
        }
        let l = Link::new(x, y);
        if !pairs.insert((l.a.router.clone(), l.b.router.clone())) {
            return Err(TopologyError::DuplicateLink(l.a.router, l.b.router));
        }
        links.push(l);
    }
    let mut subnets = BTreeMap::new();
    for (name, s) in d.subnets {
        let attach = Endpoint::parse(&s.attach)?;
        check(&attach)?;
        if !used.insert(attach.clone()) {
            return Err(TopologyError::EndpointReused(attach.to_string()));
        }
        subnets.insert(
            name.clone(),
            Subnet {
                name,
                prefix: s.prefix,
                attach,
            },
        );
    }
    t.links = links;
    t.subnets = subnets;
    Ok(t)
}

impl Topology {
    pub fn link_between(&self, r: &str, n: &str) -> Option<LinkId> {
        self.links
            .iter()
            .position(|l| (l.a.router == r && l.b.router == n) || (l.a.router == n && l.b.router == r))
    }

    /// Neighbors of `r` with the connecting link, sorted by neighbor name.
    pub fn neighbors(&self, r: &str) -> Vec<(String, LinkId)> {
        let mut v: Vec<(String, LinkId)> = self
            .links
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.oriented(r).map(|(_, far)| (far.router.clone(), i)))
            .collect();
        v.sort();
        v
    }

    pub fn link_by_name(&self, name: &str) -> Option<LinkId> {
        self.links.iter().position(|l| l.name() == name)
    }

    /// Interfaces of `router` referenced by links or subnet attachments.
    pub fn used_interfaces(&self, router: &str) -> Vec<String> {
        let mut v: Vec<String> = self
            .links
            .iter()
            .flat_map(|l| [&l.a, &l.b])
            .chain(self.subnets.values().map(|s| &s.attach))
            .filter(|e| e.router == router)
            .map(|e| e.iface.clone())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// The subnet attached at `router.iface`, if any.
    pub fn subnet_at(&self, router: &str, iface: &str) -> Option<&Subnet> {
        self.subnets
            .values()
            .find(|s| s.attach.router == router && s.attach.iface == iface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "routers": ["r1", "r2", "r3"],
        "links": [["r1.e2", "r2.e1"], ["r2.e3", "r3.e2"], ["r1.e3", "r3.e1"]],
        "subnets": {"S": {"prefix": "1.0.1.0/24", "attach": "r1.s"},
                    "T": {"prefix": "1.0.3.0/24", "attach": "r3.t"}}
    }"#;

    #[test]
    fn triangle_parses() {
        let t = parse_topology(TRIANGLE).unwrap();
        assert_eq!(t.links.len(), 3);
        assert_eq!(t.subnets["S"].attach.router, "r1");
        assert_eq!(t.subnets["T"].attach.router, "r3");
        assert_eq!(t.links[2].name(), "r1-r3");
        assert_eq!(t.neighbors("r1").iter().map(|n| n.0.as_str()).collect::<Vec<_>>(), ["r2", "r3"]);
    }

    #[test]
    fn single_router_without_links() {
        let t = parse_topology(r#"{"routers": ["solo"], "links": []}"#).unwrap();
        assert!(t.links.is_empty());
        assert_eq!(t.routers, ["solo"]);
    }

    #[test]
    fn unknown_interface_rejected() {
        let doc = r#"{"routers": {"r1": ["e0"], "r2": ["e0"]}, "links": [["r1.e0", "r2.e9"]]}"#;
        assert_eq!(parse_topology(doc), Err(TopologyError::UnknownInterface("r2.e9".into())));
        let doc = r#"{"routers": ["r1"], "links": [["r1.e0", "rx.e0"]]}"#;
        assert_eq!(parse_topology(doc), Err(TopologyError::UnknownRouter("rx".into())));
    }

    #[test]
    fn self_and_parallel_links_rejected() {
        let doc = r#"{"routers": ["r1"], "links": [["r1.e0", "r1.e1"]]}"#;
        assert!(matches!(parse_topology(doc), Err(TopologyError::SelfLink(_))));
        let doc = r#"{"routers": ["r1","r2"], "links": [["r1.e0", "r2.e0"], ["r2.e1", "r1.e1"]]}"#;
        assert!(matches!(parse_topology(doc), Err(TopologyError::DuplicateLink(..))));
    }
}
