use probcfg::denotational::{expect, normalized_semantics, Expectation};
use probcfg::gallery::{self, LoopBody};
use probcfg::rational::to_f64;
use probcfg::syntax::{parse_program, Expr};
use probcfg::StopRule;

fn main() {
    let rule = StopRule::default();
    let mut programs = vec![("dice".to_string(), gallery::p1())];
    for body in LoopBody::ALL {
        programs.push((format!("loop `{}`", body.source()), gallery::p2(body)));
    }
    for (name, p) in &programs {
        match normalized_semantics(p, &rule) {
            Ok(n) if n.report.criterion == probcfg::Criterion::Exact => {
                println!("{name}: {} = {} / {}", n.value, n.numerator, n.denominator)
            }
            Ok(n) => println!("{name}: ~{:.9}  [{}]", to_f64(&n.value), n.report),
            Err(e) => println!("{name}: {e}"),
        }
    }

    // pre-expectation of y at a few stores
    let p = parse_program("var x y; while y < x { y ~ {0: 1/2, 1: 1/2}; y := y + x }; return y").unwrap();
    let f = Expectation::Expr(Expr::Var(1));
    for x in 0..4 {
        let s = probcfg::Store::from_values([x, 0]);
        let (v, r) = expect(&p.body, &f, &s, &rule).unwrap();
        println!("x = {x}: E[y] = {v} ({})", r.criterion);
    }
}
