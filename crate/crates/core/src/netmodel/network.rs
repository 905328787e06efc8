use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::{parse_config, print_config, ConfigError, Direction, RouterConfig};
use super::diag::Diagnostic;
use super::topology::{parse_topology, Topology, TopologyError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub routers: BTreeMap<String, RouterConfig>,
    pub topology: Topology,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("router `{0}` is defined by more than one file")]
    DuplicateRouter(String),
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl Network {
    pub fn new(configs: impl IntoIterator<Item = RouterConfig>, topology: Topology) -> Result<Self, LoadError> {
        let mut routers = BTreeMap::new();
        for c in configs {
            if routers.contains_key(&c.name) {
                return Err(LoadError::DuplicateRouter(c.name));
            }
            routers.insert(c.name.clone(), c);
        }
        Ok(Network { routers, topology })
    }

    /// Parses `(file name, text)` pairs plus a topology document.
    pub fn from_texts<S: AsRef<str>>(
        files: &[(S, S)],
        topology: &str,
    ) -> Result<(Network, Vec<Diagnostic>), LoadError> {
        let mut warnings = Vec::new();
        let mut configs = Vec::new();
        for (name, text) in files {
            let (c, w) = parse_config(text.as_ref(), name.as_ref())?;
            warnings.extend(w);
            configs.push(c);
        }
        Ok((Network::new(configs, parse_topology(topology)?)?, warnings))
    }

    /// Loads every `*.cfg` file in `dir` and the topology at `topology`.
    pub fn load(dir: &Path, topology: &Path) -> Result<(Network, Vec<Diagnostic>), LoadError> {
        let entries = std::fs::read_dir(dir).map_err(|e| LoadError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
            .collect();
        paths.sort();
        let mut files = Vec::new();
        for p in &paths {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            files.push((name, read(p)?));
        }
        Network::from_texts(&files, &read(topology)?)
    }

    pub fn router(&self, name: &str) -> Option<&RouterConfig> {
        self.routers.get(name)
    }

    /// Printed configurations keyed by file name.
    pub fn to_texts(&self) -> BTreeMap<String, String> {
        self.routers
            .values()
            .map(|c| (c.file.clone(), print_config(c)))
            .collect()
    }

    /// Re-parses the printed form so spans match the printed text.
    pub fn reprinted(&self) -> Network {
        let routers = self
            .routers
            .iter()
            .map(|(k, c)| {
                let (c, _) = parse_config(&print_config(c), &c.file).expect("printed configs parse");
                (k.clone(), c)
            })
            .collect();
        Network {
            routers,
            topology: self.topology.clone(),
        }
    }

    pub fn max_ospf_cost(&self) -> u32 {
        self.routers
            .values()
            .flat_map(|c| c.interfaces.iter())
            .filter_map(|i| i.ospf_cost.as_ref().map(|c| c.value))
            .max()
            .unwrap_or(1)
    }
}

/// Checks cross-references. Returns no diagnostics for a well-formed network;
/// the order is deterministic.
pub fn validate(net: &Network) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let topo = &net.topology;
    for r in &topo.routers {
        if !net.routers.contains_key(r) {
            out.push(Diagnostic::error(format!("router `{r}` has no configuration"), None));
        }
    }
    for (name, c) in &net.routers {
        if !topo.routers.contains(name) {
            out.push(Diagnostic::error(
                format!("router `{name}` is not in the topology"),
                c.hostname_span.clone(),
            ));
        }
    }
    let endpoints = topo
        .links
        .iter()
        .flat_map(|l| [&l.a, &l.b])
        .chain(topo.subnets.values().map(|s| &s.attach));
    for e in endpoints {
        if let Some(c) = net.routers.get(&e.router) {
            if c.interface(&e.iface).is_none() {
                out.push(Diagnostic::error(format!("topology references `{e}` but it has no interface stanza"), None));
            }
        }
    }
    for s in topo.subnets.values() {
        let iface = net
            .routers
            .get(&s.attach.router)
            .and_then(|c| c.interface(&s.attach.iface));
        if let Some(p) = iface.and_then(|i| i.prefix()) {
            if !p.covers(s.prefix) {
                out.push(Diagnostic::warning(
                    format!("subnet `{}` ({}) is not inside interface prefix {p}", s.name, s.prefix),
                    iface.and_then(|i| i.address.as_ref().map(|a| a.span.clone())),
                ));
            }
        }
    }
    for (name, c) in &net.routers {
        for i in &c.interfaces {
            for dir in [Direction::In, Direction::Out] {
                if let Some(a) = i.acl(dir) {
                    if !c.acls.contains_key(&a.acl) {
                        out.push(Diagnostic::error(
                            format!("access-list `{}` applied on {name}.{} is not defined", a.acl, i.name),
                            Some(a.span.clone()),
                        ));
                    }
                }
            }
        }
        if let Some(b) = &c.bgp {
            for n in &b.neighbors {
                let Some(peer) = net.routers.get(&n.peer) else {
                    out.push(Diagnostic::error(format!("BGP neighbor `{}` does not exist", n.peer), Some(n.span.clone())));
                    continue;
                };
                let linked = topo.links.iter().any(|l| {
                    l.oriented(name)
                        .is_some_and(|(_, far)| far.router == n.peer && far.iface == n.iface)
                });
                if peer.interface(&n.iface).is_none() || !linked {
                    out.push(Diagnostic::error(
                        format!("BGP neighbor `{}` is not reachable over a link to {}.{}", n.peer, n.peer, n.iface),
                        Some(n.span.clone()),
                    ));
                }
            }
            for (peer, rules) in &b.filters {
                if b.neighbor(peer).is_none() {
                    out.push(Diagnostic::warning(
                        format!("route filter for `{peer}`, which is not a BGP neighbor"),
                        rules.first().map(|r| r.span.clone()),
                    ));
                }
            }
        }
        for s in &c.statics {
            if !net.routers.contains_key(&s.next_hop) {
                out.push(Diagnostic::error(format!("static next hop `{}` does not exist", s.next_hop), Some(s.span.clone())));
            } else if topo.link_between(name, &s.next_hop).is_none() {
                out.push(Diagnostic::error(
                    format!("static next hop `{}` is not adjacent to {name}", s.next_hop),
                    Some(s.span.clone()),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(files: &[(&str, &str)], topo: &str) -> Network {
        Network::from_texts(files, topo).unwrap().0
    }

    const TOPO: &str = r#"{"routers": ["r1", "r2"], "links": [["r1.e0", "r2.e0"]]}"#;

    #[test]
    fn clean_pair_validates() {
        let n = net(
            &[
                ("r1.cfg", "interface e0\n!\nrouter bgp 1\n neighbor r2 interface e0\n!\n"),
                ("r2.cfg", "interface e0\n!\nrouter bgp 2\n neighbor r1 interface e0\n!\n"),
            ],
            TOPO,
        );
        assert_eq!(validate(&n), vec![]);
    }

    #[test]
    fn absent_bgp_neighbor_is_one_error() {
        let n = net(
            &[
                ("r1.cfg", "interface e0\n!\nrouter bgp 1\n neighbor r7 interface e0\n!\n"),
                ("r2.cfg", "interface e0\n!\n"),
            ],
            TOPO,
        );
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error() && d[0].message.contains("r7"));
    }

    #[test]
    fn undefined_acl_is_one_error() {
        let n = net(
            &[("r1.cfg", "interface e0\n ip access-group nope out\n!\n"), ("r2.cfg", "interface e0\n!\n")],
            TOPO,
        );
        let d = validate(&n);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].span.as_ref().unwrap().start, 2);
    }

    #[test]
    fn validate_is_order_stable() {
        let n = net(
            &[
                ("r1.cfg", "interface e0\n ip access-group a in\n!\nip route 1.0.0.0/8 next-hop r9\n"),
                ("r2.cfg", "interface e1\n!\n"),
            ],
            TOPO,
        );
        let a = validate(&n);
        assert_eq!(a.len(), 3);
        assert_eq!(a, validate(&n));
    }
}
