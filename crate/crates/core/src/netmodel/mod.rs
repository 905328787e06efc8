//! Router configurations, topology and their cross-reference checks.

pub mod config;
pub mod diag;
pub mod network;
pub mod prefix;
pub mod topology;

pub use config::{parse_config, print_config, Action, Direction, RouterConfig};
pub use diag::{Diagnostic, Severity};
pub use network::{validate, LoadError, Network};
pub use prefix::{Prefix, Span};
pub use topology::{parse_topology, Endpoint, Link, LinkId, Subnet, Topology};
