//! The CDCL solver on its own: incremental solving under assumptions and the
//! failed-assumption core.

use cfgloc::solver::sat::{SatSolver, SolveResult};

fn main() {
    let mut s = SatSolver::new();
    let a = s.new_var();
    let b = s.new_var();
    let c = s.new_var();
    s.add_clause(&[a.neg(), b.pos()]);
    s.add_clause(&[b.neg(), c.pos()]);

    println!("{:?}", s.solve(&[a.pos()]));
    println!("c = {}", s.model_value(c));

    match s.solve(&[a.pos(), c.neg(), b.pos()]) {
        SolveResult::Unsat => println!("unsat, core {:?}", s.failed_assumptions()),
        r => println!("{r:?}"),
    }
}
