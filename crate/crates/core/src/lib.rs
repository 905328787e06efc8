pub mod encoder;
pub mod failures;
pub mod harness;
pub mod mcs;
pub mod netmodel;
pub mod report;
pub mod requirements;
pub mod solver;
