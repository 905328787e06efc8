//! Router configuration language: a line-oriented IOS-like subset.
//!
//! ```text
//! hostname r1
//! interface eth0
//!  ip 10.0.12.1/30
//!  ospf cost 10
//!  ip access-group blockT out
//! !
//! router ospf
//!  network 10.0.12.0/30
//! !
//! router bgp 65001
//!  neighbor r2 interface eth0
//!  network 1.0.1.0/24
//!  filter out r2 permit 1.0.0.0/16 deny 0.0.0.0/0
//! !
//! ip route 1.0.3.0/24 next-hop r2
//! access-list blockT deny src any dst 1.0.3.0/24
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use super::diag::Diagnostic;
use super::prefix::{parse_addr_len, Prefix, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Permit,
    Deny,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Permit => "permit",
            Action::Deny => "deny",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "permit" => Some(Action::Permit),
            "deny" => Some(Action::Deny),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AclRule {
    pub action: Action,
    /// `None` matches any address.
    pub src: Option<Prefix>,
    pub dst: Option<Prefix>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AclDef {
    pub name: String,
    pub rules: Vec<AclRule>,
}

impl AclDef {
    pub fn span(&self) -> Span {
        let first = self.rules[0].span.clone();
        self.rules.iter().fold(first, |s, r| s.join(&r.span))
    }

    /// First-match evaluation with an implicit trailing deny.
    pub fn permits(&self, src: u32, dst: u32) -> bool {
        for r in &self.rules {
            let s_ok = r.src.is_none_or(|p| p.contains_addr(src));
            let d_ok = r.dst.is_none_or(|p| p.contains_addr(dst));
            if s_ok && d_ok {
                return r.action == Action::Permit;
            }
        }
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AclApply {
    pub acl: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interface {
    pub name: String,
    /// Interface address and mask length, host bits kept.
    pub address: Option<Spanned<(u32, u8)>>,
    pub shutdown: Option<Span>,
    pub ospf_cost: Option<Spanned<u32>>,
    pub ospf_passive: Option<Span>,
    pub in_acl: Option<AclApply>,
    pub out_acl: Option<AclApply>,
    pub span: Span,
}

impl Interface {
    pub fn new(name: &str, span: Span) -> Self {
        Interface {
            name: name.to_string(),
            address: None,
            shutdown: None,
            ospf_cost: None,
            ospf_passive: None,
            in_acl: None,
            out_acl: None,
            span,
        }
    }

    pub fn enabled(&self) -> bool {
        self.shutdown.is_none()
    }

    pub fn prefix(&self) -> Option<Prefix> {
        self.address
            .as_ref()
            .map(|a| Prefix::containing(a.value.0, a.value.1))
    }

    pub fn acl(&self, dir: Direction) -> Option<&AclApply> {
        match dir {
            Direction::In => self.in_acl.as_ref(),
            Direction::Out => self.out_acl.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OspfProcess {
    pub process: Option<u32>,
    pub networks: Vec<Spanned<Prefix>>,
    pub span: Span,
}

impl OspfProcess {
    pub fn covers(&self, p: Prefix) -> bool {
        self.networks.iter().any(|n| n.value.covers(p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgpNeighbor {
    pub peer: String,
    /// The peer's interface on the shared link.
    pub iface: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterRule {
    pub action: Action,
    pub prefix: Prefix,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgpProcess {
    pub asn: u32,
    pub neighbors: Vec<BgpNeighbor>,
    pub networks: Vec<Spanned<Prefix>>,
    /// Outbound route filters keyed by neighbor router.
    pub filters: BTreeMap<String, Vec<FilterRule>>,
    pub span: Span,
}

impl BgpProcess {
    pub fn neighbor(&self, peer: &str) -> Option<&BgpNeighbor> {
        self.neighbors.iter().find(|n| n.peer == peer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticRoute {
    pub prefix: Prefix,
    pub next_hop: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouterConfig {
    pub name: String,
    pub file: String,
    pub hostname_span: Option<Span>,
    pub interfaces: Vec<Interface>,
    pub acls: BTreeMap<String, AclDef>,
    pub ospf: Option<OspfProcess>,
    pub bgp: Option<BgpProcess>,
    pub statics: Vec<StaticRoute>,
}

impl RouterConfig {
    pub fn interface(&self, name: &str) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn interface_mut(&mut self, name: &str) -> Option<&mut Interface> {
        self.interfaces.iter_mut().find(|i| i.name == name)
    }

    /// A copy with every span blanked, for structural comparison.
    pub fn erase_spans(&self) -> RouterConfig {
        let z = || Span::line("", 0);
        let mut c = self.clone();
        c.file.clear();
        c.hostname_span = None;
        for i in &mut c.interfaces {
            i.span = z();
            if let Some(a) = &mut i.address {
                a.span = z();
            }
            if let Some(s) = &mut i.shutdown {
                *s = z();
            }
            if let Some(s) = &mut i.ospf_cost {
                s.span = z();
            }
            if let Some(s) = &mut i.ospf_passive {
                *s = z();
            }
            for a in [&mut i.in_acl, &mut i.out_acl].into_iter().flatten() {
                a.span = z();
            }
        }
        for a in c.acls.values_mut() {
            for r in &mut a.rules {
                r.span = z();
            }
        }
        if let Some(o) = &mut c.ospf {
            o.span = z();
            for n in &mut o.networks {
                n.span = z();
            }
        }
        if let Some(b) = &mut c.bgp {
            b.span = z();
            for n in &mut b.networks {
                n.span = z();
            }
            for n in &mut b.neighbors {
                n.span = z();
            }
            for rules in b.filters.values_mut() {
                for r in rules {
                    r.span = z();
                }
            }
        }
        for s in &mut c.statics {
            s.span = z();
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}:{line}: {message}")]
    Semantic {
        file: String,
        line: usize,
        message: String,
    },
}

impl ConfigError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        match self {
            ConfigError::Syntax {
                file,
                line,
                column,
                message,
            } => Diagnostic::error(message.clone(), Some(Span::line(file, *line))).at_column(*column),
            ConfigError::Semantic { file, line, message } => {
                Diagnostic::error(message.clone(), Some(Span::line(file, *line)))
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stanza {
    Top,
    Interface(usize),
    Ospf,
    Bgp,
}

struct Tok<'a> {
    col: usize,
    text: &'a str,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    col: s + 1,
                    text: &line[s..i],
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            col: s + 1,
            text: &line[s..],
        });
    }
    out
}

struct Parser<'a> {
    file: &'a str,
    line: usize,
    cfg: RouterConfig,
    warnings: Vec<Diagnostic>,
    last_acl: Option<String>,
}

impl Parser<'_> {
    fn span(&self) -> Span {
        Span::line(self.file, self.line)
    }

    fn syntax(&self, col: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::Syntax {
            file: self.file.to_string(),
            line: self.line,
            column: col,
            message: message.into(),
        }
    }

    fn semantic(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Semantic {
            file: self.file.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn warn_unknown(&mut self, toks: &[Tok]) {
        let text: Vec<&str> = toks.iter().map(|t| t.text).collect();
        self.warnings.push(
            Diagnostic::warning(format!("ignoring unknown statement `{}`", text.join(" ")), Some(self.span()))
                .at_column(toks[0].col),
        );
    }

    fn expect_len(&self, toks: &[Tok], n: usize, what: &str) -> Result<(), ConfigError> {
        if toks.len() < n {
            let col = toks.last().map(|t| t.col + t.text.len()).unwrap_or(1);
            return Err(self.syntax(col, format!("incomplete `{what}` statement")));
        }
        if toks.len() > n {
            return Err(self.syntax(toks[n].col, format!("unexpected `{}`", toks[n].text)));
        }
        Ok(())
    }

    fn prefix(&self, tok: &Tok) -> Result<Prefix, ConfigError> {
        tok.text.parse().map_err(|e| self.syntax(tok.col, format!("{e}")))
    }

    fn addr_match(&self, tok: &Tok) -> Result<Option<Prefix>, ConfigError> {
        if tok.text == "any" {
            Ok(None)
        } else {
            self.prefix(tok).map(Some)
        }
    }

    fn action(&self, tok: &Tok) -> Result<Action, ConfigError> {
        Action::parse(tok.text).ok_or_else(|| self.syntax(tok.col, format!("expected permit or deny, found `{}`", tok.text)))
    }

    fn top(&mut self, toks: &[Tok]) -> Result<Stanza, ConfigError> {
        let kw = toks[0].text;
        if kw != "access-list" {
            self.last_acl = None;
        }
        match kw {
            "hostname" => {
                self.expect_len(toks, 2, "hostname")?;
                self.cfg.name = toks[1].text.to_string();
                self.cfg.hostname_span = Some(self.span());
            }
            "interface" => {
                self.expect_len(toks, 2, "interface")?;
                let name = toks[1].text;
                if self.cfg.interface(name).is_some() {
                    return Err(self.semantic(format!("duplicate interface `{name}`")));
                }
                self.cfg.interfaces.push(Interface::new(name, self.span()));
                return Ok(Stanza::Interface(self.cfg.interfaces.len() - 1));
            }
            "router" if toks.len() >= 2 && toks[1].text == "ospf" => {
                if toks.len() > 3 {
                    return Err(self.syntax(toks[3].col, format!("unexpected `{}`", toks[3].text)));
                }
                let process = match toks.get(2) {
                    Some(t) => Some(t.text.parse().map_err(|_| self.syntax(t.col, "expected OSPF process number"))?),
                    None => None,
                };
                if self.cfg.ospf.is_some() {
                    return Err(self.semantic("second `router ospf` process"));
                }
                self.cfg.ospf = Some(OspfProcess {
                    process,
                    networks: Vec::new(),
                    span: self.span(),
                });
                return Ok(Stanza::Ospf);
            }
            "router" if toks.len() >= 2 && toks[1].text == "bgp" => {
                self.expect_len(toks, 3, "router bgp")?;
                let asn = toks[2]
                    .text
                    .parse()
                    .map_err(|_| self.syntax(toks[2].col, "expected AS number"))?;
                if self.cfg.bgp.is_some() {
                    return Err(self.semantic("second `router bgp` process"));
                }
                self.cfg.bgp = Some(BgpProcess {
                    asn,
                    neighbors: Vec::new(),
                    networks: Vec::new(),
                    filters: BTreeMap::new(),
                    span: self.span(),
                });
                return Ok(Stanza::Bgp);
            }
            "ip" if toks.len() >= 2 && toks[1].text == "route" => {
                self.expect_len(toks, 5, "ip route")?;
                if toks[3].text != "next-hop" {
                    return Err(self.syntax(toks[3].col, "expected `next-hop`"));
                }
                let prefix = self.prefix(&toks[2])?;
                self.cfg.statics.push(StaticRoute {
                    prefix,
                    next_hop: toks[4].text.to_string(),
                    span: self.span(),
                });
            }
            "access-list" => {
                self.expect_len(toks, 7, "access-list")?;
                let name = toks[1].text.to_string();
                let action = self.action(&toks[2])?;
                if toks[3].text != "src" {
                    return Err(self.syntax(toks[3].col, "expected `src`"));
                }
                let src = self.addr_match(&toks[4])?;
                if toks[5].text != "dst" {
                    return Err(self.syntax(toks[5].col, "expected `dst`"));
                }
                let dst = self.addr_match(&toks[6])?;
                let rule = AclRule {
                    action,
                    src,
                    dst,
                    span: self.span(),
                };
                let continuing = self.last_acl.as_deref() == Some(name.as_str());
                match self.cfg.acls.get_mut(&name) {
                    Some(_) if !continuing => {
                        return Err(self.semantic(format!("duplicate access-list `{name}`")));
                    }
                    Some(def) => def.rules.push(rule),
                    None => {
                        self.cfg.acls.insert(
                            name.clone(),
                            AclDef {
                                name: name.clone(),
                                rules: vec![rule],
                            },
                        );
                    }
                }
                self.last_acl = Some(name);
            }
            _ => self.warn_unknown(toks),
        }
        Ok(Stanza::Top)
    }

    fn interface(&mut self, idx: usize, toks: &[Tok]) -> Result<(), ConfigError> {
        match (toks[0].text, toks.get(1).map(|t| t.text)) {
            ("ip", Some("access-group")) => {
                self.expect_len(toks, 4, "ip access-group")?;
                let apply = AclApply {
                    acl: toks[2].text.to_string(),
                    span: self.span(),
                };
                let iface = &mut self.cfg.interfaces[idx];
                let slot = match toks[3].text {
                    "in" => &mut iface.in_acl,
                    "out" => &mut iface.out_acl,
                    other => return Err(self.syntax(toks[3].col, format!("expected in or out, found `{other}`"))),
                };
                if slot.is_some() {
                    return Err(self.semantic("access-group already applied in this direction"));
                }
                *slot = Some(apply);
            }
            ("ip", Some(_)) => {
                self.expect_len(toks, 2, "ip")?;
                let (a, l) = parse_addr_len(toks[1].text).map_err(|e| self.syntax(toks[1].col, format!("{e}")))?;
                let span = self.span();
                self.cfg.interfaces[idx].address = Some(Spanned { value: (a, l), span });
            }
            ("shutdown", _) => {
                self.expect_len(toks, 1, "shutdown")?;
                self.cfg.interfaces[idx].shutdown = Some(self.span());
            }
            ("ospf", Some("cost")) => {
                self.expect_len(toks, 3, "ospf cost")?;
                let cost: u32 = toks[2]
                    .text
                    .parse()
                    .ok()
                    .filter(|c| (1..=65535).contains(c))
                    .ok_or_else(|| self.syntax(toks[2].col, "OSPF cost must be an integer in 1..=65535"))?;
                let span = self.span();
                self.cfg.interfaces[idx].ospf_cost = Some(Spanned { value: cost, span });
            }
            ("ospf", Some("passive")) => {
                self.expect_len(toks, 2, "ospf passive")?;
                self.cfg.interfaces[idx].ospf_passive = Some(self.span());
            }
            _ => self.warn_unknown(toks),
        }
        Ok(())
    }

    fn ospf(&mut self, toks: &[Tok]) -> Result<(), ConfigError> {
        if toks[0].text == "network" {
            self.expect_len(toks, 2, "network")?;
            let p = self.prefix(&toks[1])?;
            let span = self.span();
            self.cfg.ospf.as_mut().unwrap().networks.push(Spanned { value: p, span });
        } else {
            self.warn_unknown(toks);
        }
        Ok(())
    }

    fn bgp(&mut self, toks: &[Tok]) -> Result<(), ConfigError> {
        match toks[0].text {
            "network" => {
                self.expect_len(toks, 2, "network")?;
                let p = self.prefix(&toks[1])?;
                let span = self.span();
                self.cfg.bgp.as_mut().unwrap().networks.push(Spanned { value: p, span });
            }
            "neighbor" => {
                self.expect_len(toks, 4, "neighbor")?;
                if toks[2].text != "interface" {
                    return Err(self.syntax(toks[2].col, "expected `interface`"));
                }
                let n = BgpNeighbor {
                    peer: toks[1].text.to_string(),
                    iface: toks[3].text.to_string(),
                    span: self.span(),
                };
                let bgp = self.cfg.bgp.as_mut().unwrap();
                if bgp.neighbor(&n.peer).is_some() {
                    return Err(self.semantic(format!("duplicate neighbor `{}`", n.peer)));
                }
                bgp.neighbors.push(n);
            }
            "filter" => {
                if toks.len() < 5 || (toks.len() - 3) % 2 != 0 {
                    let col = toks.last().map(|t| t.col).unwrap_or(1);
                    return Err(self.syntax(col, "expected `filter out ROUTER (permit|deny) PREFIX ...`"));
                }
                if toks[1].text != "out" {
                    return Err(self.syntax(toks[1].col, "only outbound filters are supported"));
                }
                let mut rules = Vec::new();
                for pair in toks[3..].chunks(2) {
                    rules.push(FilterRule {
                        action: self.action(&pair[0])?,
                        prefix: self.prefix(&pair[1])?,
                        span: self.span(),
                    });
                }
                let bgp = self.cfg.bgp.as_mut().unwrap();
                bgp.filters.entry(toks[2].text.to_string()).or_default().extend(rules);
            }
            _ => self.warn_unknown(toks),
        }
        Ok(())
    }
}

fn is_opener(toks: &[Tok]) -> bool {
    match toks[0].text {
        "interface" => true,
        "router" => matches!(toks.get(1).map(|t| t.text), Some("ospf" | "bgp")),
        _ => false,
    }
}

fn is_top_level(toks: &[Tok]) -> bool {
    matches!(toks[0].text, "hostname" | "access-list")
        || (toks[0].text == "ip" && toks.get(1).map(|t| t.text) == Some("route"))
}

fn file_stem(filename: &str) -> String {
    std::path::Path::new(filename)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| filename.to_string())
}

/// Parses one router's configuration. Unknown statements come back as
/// warnings alongside the config.
pub fn parse_config(text: &str, filename: &str) -> Result<(RouterConfig, Vec<Diagnostic>), ConfigError> {
    let mut p = Parser {
        file: filename,
        line: 0,
        cfg: RouterConfig {
            name: file_stem(filename),
            file: filename.to_string(),
            hostname_span: None,
            interfaces: Vec::new(),
            acls: BTreeMap::new(),
            ospf: None,
            bgp: None,
            statics: Vec::new(),
        },
        warnings: Vec::new(),
        last_acl: None,
    };
    let mut stanza = Stanza::Top;
    let mut opened = (0usize, String::new());
    for (i, raw) in text.lines().enumerate() {
        p.line = i + 1;
        let toks = tokenize(raw);
        if toks.is_empty() || toks[0].text.starts_with('#') {
            continue;
        }
        if toks[0].text == "!" || toks[0].text == "exit" {
            stanza = Stanza::Top;
            p.last_acl = None;
            continue;
        }
        if stanza != Stanza::Top && (is_opener(&toks) || is_top_level(&toks)) {
            return Err(p.syntax(
                toks[0].col,
                format!("stanza `{}` opened at line {} is not terminated", opened.1, opened.0),
            ));
        }
        match stanza {
            Stanza::Top => {
                stanza = p.top(&toks)?;
                if stanza != Stanza::Top {
                    let words: Vec<&str> = toks.iter().map(|t| t.text).collect();
                    opened = (p.line, words.join(" "));
                }
            }
            Stanza::Interface(idx) => p.interface(idx, &toks)?,
            Stanza::Ospf => p.ospf(&toks)?,
            Stanza::Bgp => p.bgp(&toks)?,
        }
    }
    if stanza != Stanza::Top {
        p.line = opened.0;
        return Err(p.syntax(1, format!("stanza `{}` opened at line {} is not terminated", opened.1, opened.0)));
    }
    Ok((p.cfg, p.warnings))
}

/// Renders a configuration in the grammar accepted by [`parse_config`].
pub fn print_config(cfg: &RouterConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "hostname {}", cfg.name);
    for i in &cfg.interfaces {
        let _ = writeln!(s, "!\ninterface {}", i.name);
        if let Some(a) = &i.address {
            let _ = writeln!(s, " ip {}/{}", Ipv4Addr::from(a.value.0), a.value.1);
        }
        if i.shutdown.is_some() {
            let _ = writeln!(s, " shutdown");
        }
        if let Some(c) = &i.ospf_cost {
            let _ = writeln!(s, " ospf cost {}", c.value);
        }
        if i.ospf_passive.is_some() {
            let _ = writeln!(s, " ospf passive");
        }
        for (dir, a) in [(Direction::In, &i.in_acl), (Direction::Out, &i.out_acl)] {
            if let Some(a) = a {
                let _ = writeln!(s, " ip access-group {} {}", a.acl, dir.as_str());
            }
        }
        s.push_str("!\n");
    }
    if let Some(o) = &cfg.ospf {
        match o.process {
            Some(pid) => {
                let _ = writeln!(s, "router ospf {pid}");
            }
            None => s.push_str("router ospf\n"),
        }
        for n in &o.networks {
            let _ = writeln!(s, " network {}", n.value);
        }
        s.push_str("!\n");
    }
    if let Some(b) = &cfg.bgp {
        let _ = writeln!(s, "router bgp {}", b.asn);
        for n in &b.neighbors {
            let _ = writeln!(s, " neighbor {} interface {}", n.peer, n.iface);
        }
        for n in &b.networks {
            let _ = writeln!(s, " network {}", n.value);
        }
        for (peer, rules) in &b.filters {
            if rules.is_empty() {
                continue;
            }
            let _ = write!(s, " filter out {peer}");
            for r in rules {
                let _ = write!(s, " {} {}", r.action.as_str(), r.prefix);
            }
            s.push('\n');
        }
        s.push_str("!\n");
    }
    for r in &cfg.statics {
        let _ = writeln!(s, "ip route {} next-hop {}", r.prefix, r.next_hop);
    }
    let any = |p: &Option<Prefix>| p.map(|p| p.to_string()).unwrap_or_else(|| "any".into());
    for a in cfg.acls.values() {
        for r in &a.rules {
            let _ = writeln!(s, "access-list {} {} src {} dst {}", a.name, r.action.as_str(), any(&r.src), any(&r.dst));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interface_with_cost() {
        let (c, w) = parse_config("interface eth0\n ip 1.0.1.1/24\n ospf cost 1\n!\n", "r1.cfg").unwrap();
        assert!(w.is_empty());
        assert_eq!(c.name, "r1");
        assert_eq!(c.interfaces.len(), 1);
        let i = &c.interfaces[0];
        assert_eq!(i.ospf_cost.as_ref().unwrap().value, 1);
        assert_eq!(i.prefix().unwrap().to_string(), "1.0.1.0/24");
        assert_eq!(i.ospf_cost.as_ref().unwrap().span, Span::line("r1.cfg", 3));
    }

    #[test]
    fn acl_definition_and_use() {
        let text = "interface eth1\n ip access-group deptFilter out\n!\naccess-list deptFilter permit src 1.0.2.0/24 any\n";
        // the `dst` keyword is required
        assert!(parse_config(text, "core2.cfg").is_err());
        let text = "interface eth1\n ip access-group deptFilter out\n!\naccess-list deptFilter permit src 1.0.2.0/24 dst any\n";
        let (c, _) = parse_config(text, "core2.cfg").unwrap();
        let acl = &c.acls["deptFilter"];
        assert_eq!(acl.rules.len(), 1);
        assert_eq!(acl.rules[0].action, Action::Permit);
        assert_eq!(acl.rules[0].src.unwrap().to_string(), "1.0.2.0/24");
        assert_eq!(acl.rules[0].dst, None);
        assert_eq!(c.interfaces[0].out_acl.as_ref().unwrap().acl, "deptFilter");
    }

    #[test]
    fn unterminated_stanza_names_opening_line() {
        let err = parse_config("hostname r1\ninterface eth0\n ip 1.0.0.1/24\n", "r1.cfg").unwrap_err();
        match err {
            ConfigError::Syntax { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("line 2"), "{message}");
            }
            e => panic!("{e}"),
        }
        let err = parse_config("interface eth0\ninterface eth1\n!\n", "r1.cfg").unwrap_err();
        assert!(err.to_string().contains("opened at line 1"), "{err}");
    }

    #[test]
    fn unknown_statement_warns() {
        let (_, w) = parse_config("service timestamps\ninterface e0\n description uplink\n!\n", "r.cfg").unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|d| !d.is_error()));
    }

    #[test]
    fn duplicate_names_are_semantic_errors() {
        let e = parse_config("interface e0\n!\ninterface e0\n!\n", "r.cfg").unwrap_err();
        assert!(matches!(e, ConfigError::Semantic { line: 3, .. }));
        let e = parse_config(
            "access-list A permit src any dst any\nip route 1.0.0.0/8 next-hop x\naccess-list A deny src any dst any\n",
            "r.cfg",
        )
        .unwrap_err();
        assert!(matches!(e, ConfigError::Semantic { line: 3, .. }));
    }

    #[test]
    fn cost_range_enforced() {
        assert!(parse_config("interface e0\n ospf cost 0\n!\n", "r.cfg").is_err());
        assert!(parse_config("interface e0\n ospf cost 65536\n!\n", "r.cfg").is_err());
    }

    #[test]
    fn bgp_filters_accumulate() {
        let text = "router bgp 65001\n neighbor r2 interface eth0\n filter out r2 permit 1.0.1.0/24\n filter out r2 deny 0.0.0.0/0\n!\n";
        let (c, _) = parse_config(text, "r1.cfg").unwrap();
        let b = c.bgp.unwrap();
        assert_eq!(b.filters["r2"].len(), 2);
        assert_eq!(b.filters["r2"][1].span.start, 4);
        assert_eq!(b.neighbors[0].iface, "eth0");
    }

    #[test]
    fn acl_first_match_and_implicit_deny() {
        let text = "access-list A deny src any dst 1.0.3.0/24\naccess-list A permit src 1.0.0.0/16 dst any\n";
        let (c, _) = parse_config(text, "r.cfg").unwrap();
        let a = &c.acls["A"];
        assert!(!a.permits(0x0100_0101, 0x0100_0301));
        assert!(a.permits(0x0100_0101, 0x0100_0201));
        assert!(!a.permits(0x0200_0101, 0x0100_0201));
        assert_eq!(a.span(), Span { file: "r.cfg".into(), start: 1, end: 2 });
    }

    #[test]
    fn print_parse_roundtrip() {
        let text = "hostname r9\ninterface eth0\n ip 10.0.0.1/30\n shutdown\n ospf cost 7\n ospf passive\n ip access-group A in\n!\nrouter ospf 3\n network 10.0.0.0/30\n!\nrouter bgp 7\n neighbor r2 interface e1\n network 1.0.0.0/24\n filter out r2 permit 1.0.0.0/16 deny 0.0.0.0/0\n!\nip route 2.0.0.0/8 next-hop r2\naccess-list A permit src any dst 1.0.0.0/24\n";
        let (c, _) = parse_config(text, "x.cfg").unwrap();
        let (d, _) = parse_config(&print_config(&c), "x.cfg").unwrap();
        assert_eq!(c.erase_spans(), d.erase_spans());
    }
}
