use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// An IPv4 prefix with zero host bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    addr: u32,
    len: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PrefixError {
    #[error("malformed prefix `{0}`")]
    Malformed(String),
    #[error("prefix length {0} exceeds 32")]
    Length(u32),
    #[error("prefix `{0}` has host bits set")]
    HostBits(String),
}

fn netmask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len)
    }
}

impl Prefix {
    pub fn new(addr: u32, len: u8) -> Result<Self, PrefixError> {
        if len > 32 {
            return Err(PrefixError::Length(len.into()));
        }
        if addr & !netmask(len) != 0 {
            return Err(PrefixError::HostBits(format!("{}/{}", Ipv4Addr::from(addr), len)));
        }
        Ok(Prefix { addr, len })
    }

    /// The prefix containing `addr` at length `len`, host bits cleared.
    pub fn containing(addr: u32, len: u8) -> Self {
        assert!(len <= 32);
        Prefix {
            addr: addr & netmask(len),
            len,
        }
    }

    pub fn addr(self) -> u32 {
        self.addr
    }

    pub fn len(self) -> u8 {
        self.len
    }

    pub fn lo(self) -> u32 {
        self.addr
    }

    pub fn hi(self) -> u32 {
        self.addr | !netmask(self.len)
    }

    pub fn contains_addr(self, a: u32) -> bool {
        a & netmask(self.len) == self.addr
    }

    /// True if every address of `other` lies in `self`.
    pub fn covers(self, other: Prefix) -> bool {
        self.len <= other.len && self.contains_addr(other.addr)
    }

    pub fn overlaps(self, other: Prefix) -> bool {
        self.covers(other) || other.covers(self)
    }
}

impl FromStr for Prefix {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, l) = parse_addr_len(s)?;
        Prefix::new(a, l)
    }
}

/// Parses `A.B.C.D/L` without requiring zero host bits.
pub fn parse_addr_len(s: &str) -> Result<(u32, u8), PrefixError> {
    let bad = || PrefixError::Malformed(s.to_string());
    let (a, l) = s.split_once('/').ok_or_else(bad)?;
    let addr: Ipv4Addr = a.parse().map_err(|_| bad())?;
    let len: u32 = l.parse().map_err(|_| bad())?;
    if len > 32 {
        return Err(PrefixError::Length(len));
    }
    Ok((u32::from(addr), len as u8))
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", Ipv4Addr::from(self.addr), self.len)
    }
}

impl Serialize for Prefix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A 1-based inclusive line range in a configuration file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub file: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn line(file: &str, line: usize) -> Self {
        Span {
            file: file.to_string(),
            start: line,
            end: line,
        }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.file == other.file && self.start <= other.end && other.start <= self.end
    }

    pub fn join(&self, other: &Span) -> Span {
        debug_assert_eq!(self.file, other.file);
        Span {
            file: self.file.clone(),
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}:{}", self.file, self.start)
        } else {
            write!(f, "{}:{}-{}", self.file, self.start, self.end)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_bounds() {
        let p: Prefix = "1.0.1.0/24".parse().unwrap();
        assert_eq!(p.lo(), 0x0100_0100);
        assert_eq!(p.hi(), 0x0100_01ff);
        assert!(p.contains_addr(0x0100_0105));
        assert!(!p.contains_addr(0x0100_0205));
        assert_eq!(p.to_string(), "1.0.1.0/24");
    }

    #[test]
    fn host_bits_rejected() {
        assert!(matches!("1.0.1.1/24".parse::<Prefix>(), Err(PrefixError::HostBits(_))));
        assert!(matches!("1.0.1.0/33".parse::<Prefix>(), Err(PrefixError::Length(33))));
        assert!("1.0.1/24".parse::<Prefix>().is_err());
    }

    #[test]
    fn default_route_covers_everything() {
        let d: Prefix = "0.0.0.0/0".parse().unwrap();
        assert_eq!(d.hi(), u32::MAX);
        assert!(d.covers("10.0.0.0/8".parse().unwrap()));
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(a in any::<u32>(), l in 0u8..=32) {
            let p = Prefix::containing(a, l);
            prop_assert_eq!(p.to_string().parse::<Prefix>().unwrap(), p);
            prop_assert!(p.lo() <= p.hi());
            prop_assert!(p.contains_addr(a));
        }

        #[test]
        fn covers_matches_range_inclusion(a in any::<u32>(), la in 0u8..=32, b in any::<u32>(), lb in 0u8..=32) {
            let p = Prefix::containing(a, la);
            let q = Prefix::containing(b, lb);
            prop_assert_eq!(p.covers(q), p.lo() <= q.lo() && q.hi() <= p.hi());
        }
    }
}
