//! The algebraic laws checked by the property suites, one function per law.

use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use probcfg::adequacy::check_adequacy;
use probcfg::analysis::{fppd, lap, postdominators, prec, simple_cycles, Analysis, DEFAULT_NODE_GUARD};
use probcfg::convergence::Criterion;
use probcfg::denotational::Expectation;
use probcfg::fixpoint::Engine;
use probcfg::pcfg::Pcfg;
use probcfg::rational::inverse_power_of_ten;
use probcfg::store::{apply_assign, apply_rassign, select, select_not, Weight};
use probcfg::syntax::{BoolExpr, DistSpec, Expr, Stmt};
use probcfg::translate::translate_stmt;
use probcfg::{Dist, StopRule, Store};

use super::universe;

pub type Law = Result<(), TestCaseError>;

pub fn select_partitions(d: &Dist, b: &BoolExpr) -> Law {
    let yes = select(b, d).unwrap();
    let no = select_not(b, d).unwrap();
    prop_assert_eq!(&yes.add(&no), d);
    for s in yes.support() {
        prop_assert!(b.eval(s).unwrap());
    }
    for s in no.support() {
        prop_assert!(!b.eval(s).unwrap());
    }
    Ok(())
}

pub fn assignments_preserve_mass(d: &Dist, d2: &Dist, x: usize, e: &Expr, psi: &DistSpec) -> Law {
    prop_assert_eq!(apply_assign(x, e, d).unwrap().mass(), d.mass());
    prop_assert_eq!(apply_rassign(x, psi, d).mass(), d.mass());
    prop_assert_eq!(
        apply_assign(x, e, &d.add(d2)).unwrap(),
        apply_assign(x, e, d).unwrap().add(&apply_assign(x, e, d2).unwrap())
    );
    prop_assert_eq!(apply_rassign(x, psi, &d.add(d2)), apply_rassign(x, psi, d).add(&apply_rassign(x, psi, d2)));
    Ok(())
}

/// Additive, multiplicative, non-increasing, and monotone in `k`, for `k` in 1..=3.
pub fn omega_k_linear(g: &Pcfg, d1: &Dist, d2: &Dist, c: &Weight) -> Law {
    let e = Engine::new(g.clone()).unwrap();
    let (start, end) = (g.start(), g.end());
    for k in 1..=3 {
        let w = |d: &Dist| e.omega_k(k, start, end, d).unwrap();
        let (o1, o2) = (w(d1), w(d2));
        prop_assert_eq!(w(&d1.add(d2)), o1.add(&o2));
        prop_assert_eq!(w(&d1.scale(c)), o1.scale(c));
        prop_assert!(o1.mass() <= d1.mass());
        if k > 1 {
            prop_assert!(e.omega_k(k - 1, start, end, d1).unwrap().le(&o1));
        }
    }
    Ok(())
}

/// `ω_k(v, v2) = ω_k(v1, v2) ∘ ω_k(v, v1)` for every postdominator triple.
pub fn composition(stmt: &Stmt, d: &Dist, k: usize) -> Law {
    let e = Engine::new(translate_stmt(stmt, &universe(2))).unwrap();
    let pd = e.analysis().pd().clone();
    let mut checked = BTreeSet::new();
    for v in e.graph().node_ids() {
        for &v1 in pd.of(v) {
            let mid = e.omega_k(k, v, v1, d).unwrap();
            for &v2 in pd.of(v1) {
                let whole = e.omega_k(k, v, v2, d).unwrap();
                prop_assert_eq!(&whole, &e.omega_k(k, v1, v2, &mid).unwrap(), "({}, {}, {}) at k={}", v, v1, v2, k);
                checked.insert((v, v1, v2));
            }
        }
    }
    prop_assert!(!checked.is_empty());
    Ok(())
}

pub fn lap_additive(g: &Pcfg) -> Law {
    let pd = postdominators(g);
    let l = |a, b| lap(g, &pd, a, b, DEFAULT_NODE_GUARD).unwrap();
    for v in g.node_ids() {
        for &v1 in pd.of(v) {
            for &v2 in pd.of(v1) {
                prop_assert_eq!(l(v, v2), l(v, v1) + l(v1, v2), "({}, {}, {})", v, v1, v2);
            }
        }
    }
    Ok(())
}

/// The fppd is the proper postdominator preceding every other one.
pub fn fppd_is_prec_minimum(g: &Pcfg) -> Law {
    let pd = postdominators(g);
    for v in g.node_ids().filter(|v| *v != g.end()) {
        let proper: Vec<_> = pd.proper(v).collect();
        let minima: Vec<_> = proper
            .iter()
            .copied()
            .filter(|&w| proper.iter().all(|&u| u == w || prec(g, &pd, v, w, u, DEFAULT_NODE_GUARD).unwrap()))
            .collect();
        prop_assert_eq!(minima, vec![fppd(g, &pd, v).unwrap()], "node {}", v);
    }
    Ok(())
}

pub fn cycles_have_inducing_nodes(g: &Pcfg) -> Law {
    let inducing = Analysis::new(g).unwrap().cycle_inducing();
    for cycle in simple_cycles(g, DEFAULT_NODE_GUARD).unwrap() {
        prop_assert!(cycle.iter().any(|v| inducing.contains(v)), "{:?} misses {:?}", cycle, inducing);
    }
    Ok(())
}

pub fn adequacy_loop_free(stmt: &Stmt, f: &Expectation, d: &Dist) -> Law {
    let res = check_adequacy(stmt, &universe(2), f, d, &StopRule::default()).unwrap();
    prop_assert!(res.loop_free);
    prop_assert_eq!(&res.lhs, &res.rhs);
    prop_assert_eq!(res.graph_report.criterion, Criterion::Exact);
    prop_assert_eq!(res.denot_report.criterion, Criterion::Exact);
    Ok(())
}

pub fn adequacy_counter_loops(stmt: &Stmt, f: &Expectation, d: &Dist) -> Law {
    let res = check_adequacy(stmt, &universe(3), f, d, &StopRule::default()).unwrap();
    prop_assert_eq!(res.graph_report.criterion, Criterion::Exact);
    prop_assert_eq!(res.denot_report.criterion, Criterion::Exact);
    prop_assert_eq!(&res.lhs, &res.rhs);
    Ok(())
}

/// Both sides approach their limit from below; only certified runs are compared.
pub fn adequacy_unrestricted(stmt: &Stmt, f: &Expectation, d: &Dist) -> Law {
    let rule = StopRule::new(inverse_power_of_ten(6), 40);
    let res = check_adequacy(stmt, &universe(2), f, d, &rule).unwrap();
    if res.graph_report.certified() && res.denot_report.certified() {
        prop_assert!(res.abs_diff <= res.slack, "{:?}", res);
    }
    if res.loop_free {
        prop_assert_eq!(&res.lhs, &res.rhs);
    }
    prop_assert!(res.lhs >= BigRational::zero());
    Ok(())
}

pub fn deterministic_concentrated(g: &Pcfg, s: &Store) -> Law {
    let e = Engine::new(g.clone()).unwrap();
    let d = Dist::point(s.clone());
    for k in 1..=3 {
        prop_assert!(e.omega_k(k, g.start(), g.end(), &d).unwrap().len() <= 1);
    }
    let rule = StopRule::new(inverse_power_of_ten(6), 6);
    prop_assert!(e.run_graph(&d, &rule).unwrap().0.len() <= 1);
    Ok(())
}
