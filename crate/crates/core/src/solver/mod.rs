//! Boolean and bit-vector constraint solving.

pub mod bitblast;
pub mod sat;
pub mod system;
pub mod term;

pub use sat::{solve_cnf, CnfOutcome, Lit, SatSolver, SolveResult, Var};
pub use system::{Category, CheckResult, Guard, Label, LabelId, Model, System, SystemError};
pub use term::{Sort, Term, TermId, TermStore, VarId};
