//! Both semantics, side by side, on the corpus programs and a spread input.

use probcfg::adequacy::{check_adequacy, retrieve_expectation};
use probcfg::denotational::Expectation;
use probcfg::gallery::{self, LoopBody};
use probcfg::store::Weight;
use probcfg::{Dist, StopRule, Store};

fn main() {
    let rule = StopRule::default();
    let spread = Dist::from_entries((0..4).map(|x| (Store::from_values([x, 0]), Weight::ratio(1, 4))));
    let mut programs = vec![gallery::p1()];
    programs.extend(LoopBody::ALL.map(gallery::p2));
    for p in &programs {
        let f = Expectation::Expr(p.ret.clone());
        let res = check_adequacy(&p.body, &p.universe, &f, &spread, &rule).unwrap();
        println!(
            "lhs {:.9}  rhs {:.9}  diff {}  slack {}  {}",
            probcfg::rational::to_f64(&res.lhs),
            probcfg::rational::to_f64(&res.rhs),
            res.abs_diff,
            probcfg::rational::to_f64(&res.slack),
            if res.passed() { "ok" } else { "MISMATCH" }
        );
    }
    let p = gallery::p1();
    let f = Expectation::Expr(p.ret.clone());
    let (v, _) = retrieve_expectation(&p.body, &p.universe, &f, &Store::zeros(2), &rule).unwrap();
    println!("expectation from the graph alone: {v}");
}
