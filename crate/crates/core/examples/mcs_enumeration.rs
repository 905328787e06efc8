//! Minimal correction sets and minimal unsatisfiable subsets of a small
//! labelled system, with both growth strategies.

use cfgloc::mcs::{MarcoOptions, MssStrategy, Problem};
use cfgloc::solver::{Category, Label, System};

fn main() {
    // x must hold; the soft constraints disagree about x and y.
    let mut s = System::new();
    let x = s.t().new_bool_var("x");
    let y = s.t().new_bool_var("y");
    let nx = s.t().not(x);
    let ny = s.t().not(y);
    let imp = s.t().implies(x, y);
    s.assert_labeled(x, Label::new(0, Category::Logic, "x")).unwrap();
    s.assert_labeled(nx, Label::new(1, Category::Config, "!x")).unwrap();
    s.assert_labeled(imp, Label::new(2, Category::Config, "x -> y")).unwrap();
    s.assert_labeled(ny, Label::new(3, Category::Config, "!y")).unwrap();

    let mut p = Problem::new(&mut s, vec![0], vec![1, 2, 3]);
    for grow in [MssStrategy::Linear, MssStrategy::Bisect] {
        let e = p
            .enumerate_mcses(&MarcoOptions {
                deadline: None,
                maximal_seeds: false,
                grow,
            })
            .unwrap();
        println!("{grow:?}: mcses={:?} muses={:?}", e.mcses, e.muses);
    }
}
