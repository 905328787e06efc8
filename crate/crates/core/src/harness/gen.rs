//! Generated OSPF networks used by the benchmarks.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::json;

use super::{fixture_dir, load_case, Case, CaseError};
use crate::netmodel::Network;
use crate::requirements::parse_requirements;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Ring,
    Tree,
    Campus,
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ring" => Ok(Shape::Ring),
            "tree" => Ok(Shape::Tree),
            "campus" => Ok(Shape::Campus),
            _ => Err(format!("unknown topology `{s}` (ring, tree, campus)")),
        }
    }
}

/// `ring` takes a router count, `tree` a level count; `campus` ignores `size`.
pub fn gen_topology(shape: Shape, size: usize) -> Result<Case, CaseError> {
    match shape {
        Shape::Ring => Ok(ring(size)),
        Shape::Tree => Ok(tree(size)),
        Shape::Campus => load_case(&fixture_dir("campus")),
    }
}

struct Builder {
    names: Vec<String>,
    ifaces: Vec<Vec<(String, String)>>,
    links: Vec<[String; 2]>,
}

impl Builder {
    fn new(n: usize, prefix: char) -> Self {
        let w = n.to_string().len().max(2);
        Builder {
            names: (1..=n).map(|i| format!("{prefix}{i:0w$}")).collect(),
            ifaces: vec![Vec::new(); n],
            links: Vec::new(),
        }
    }

    fn link(&mut self, x: usize, y: usize) {
        let k = self.links.len() + 1;
        let net = format!("10.{}.{}", k / 256, k % 256);
        let (nx, ny) = (self.names[x].clone(), self.names[y].clone());
        self.ifaces[x].push((format!("to_{ny}"), format!("{net}.1/24")));
        self.ifaces[y].push((format!("to_{nx}"), format!("{net}.2/24")));
        self.links.push([format!("{nx}.to_{ny}"), format!("{ny}.to_{nx}")]);
    }

    /// Every router gets a LAN `lanNN`; all routers run OSPF on everything.
    fn finish(mut self, k: usize) -> Case {
        let mut files = Vec::new();
        let mut subnets = serde_json::Map::new();
        for (i, r) in self.names.iter().enumerate() {
            let lan = format!("1.{}.{}", (i + 1) / 256, (i + 1) % 256);
            self.ifaces[i].push(("lan".into(), format!("{lan}.1/24")));
            subnets.insert(format!("lan_{r}"), json!({"prefix": format!("{lan}.0/24"), "attach": format!("{r}.lan")}));
            let mut t = format!("hostname {r}\n!\n");
            for (name, addr) in &self.ifaces[i] {
                let _ = write!(t, "interface {name}\n ip {addr}\n!\n");
            }
            t.push_str("router ospf\n");
            for (_, addr) in &self.ifaces[i] {
                let net = addr.rsplit_once('.').unwrap().0;
                let _ = writeln!(t, " network {net}.0/24");
            }
            t.push_str("!\n");
            files.push((format!("{r}.cfg"), t));
        }
        let lans: Vec<String> = subnets.keys().cloned().collect();
        let topo = json!({"routers": self.names, "links": self.links, "subnets": subnets}).to_string();
        let (net, warnings) = Network::from_texts(&files, &topo).expect("generated network parses");
        let doc = json!([{"id": "lans", "kind": "reachable", "pairwise": lans, "maxFailures": k}]).to_string();
        let requirements = parse_requirements(&doc, &net.topology).expect("generated requirements");
        Case {
            net,
            requirements,
            warnings,
        }
    }
}

/// `n` routers in a cycle; every LAN pair must stay connected under one
/// link failure.
pub fn ring(n: usize) -> Case {
    assert!(n >= 3, "a ring needs at least 3 routers");
    let mut b = Builder::new(n, 'r');
    for i in 0..n {
        b.link(i, (i + 1) % n);
    }
    b.finish(1)
}

/// A complete binary tree with `levels` levels; LAN pairs must be connected
/// with no failures.
pub fn tree(levels: usize) -> Case {
    assert!((1..=8).contains(&levels), "tree levels must be in 1..=8");
    let n = (1usize << levels) - 1;
    let mut b = Builder::new(n, 't');
    for c in 2..=n {
        b.link(c / 2 - 1, c - 1);
    }
    b.finish(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sim::satisfied;
    use crate::netmodel::validate;

    fn compliant(c: &Case) -> bool {
        let links = c.net.topology.links.len();
        c.requirements.iter().all(|r| {
            crate::harness::sim::assignments(links, r.max_failures)
                .iter()
                .all(|f| satisfied(&c.net, r, f))
        })
    }

    #[test]
    fn ring_and_tree_are_compliant() {
        for c in [ring(5), tree(3)] {
            assert!(c.warnings.is_empty());
            assert!(validate(&c.net).is_empty());
            assert!(compliant(&c));
        }
        assert_eq!(tree(3).net.routers.len(), 7);
        assert_eq!(ring(8).requirements.len(), 56);
    }

    #[test]
    fn tree_breaks_under_failure() {
        let c = tree(2);
        let r = c.requirements[0].with_max_failures(1);
        assert!(!satisfied(&c.net, &r, &[true, false]) || !satisfied(&c.net, &r, &[false, true]));
    }
}
