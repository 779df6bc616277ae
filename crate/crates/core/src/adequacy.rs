//! Checks that the two semantics agree: for a statement `S`, a
//! post-expectation `F′` and an input distribution `D`,
//! `Σ F(s)·D(s) = Σ F′(s′)·D′(s′)` where `F = ⟦S⟧F′` and `D′` is the
//! fixed-point semantics of the translated graph applied to `D`.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};

use crate::convergence::{ConvergenceReport, Criterion, StopRule};
use crate::denotational::{DenotError, Evaluator, Expectation};
use crate::fixpoint::{Engine, SemanticsError};
use crate::store::{Dist, Store};
use crate::syntax::{Stmt, Universe};
use crate::translate::translate_stmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdequacyError {
    #[error(transparent)]
    Graph(#[from] SemanticsError),
    #[error(transparent)]
    Denot(#[from] DenotError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdequacyResult {
    /// `Σ F(s)·D(s)`.
    pub lhs: BigRational,
    /// `Σ F′(s′)·D′(s′)`.
    pub rhs: BigRational,
    pub abs_diff: BigRational,
    pub both_converged: bool,
    pub loop_free: bool,
    pub graph_report: ConvergenceReport,
    pub denot_report: ConvergenceReport,
    /// Allowed `abs_diff`; zero when both sides are exact.
    pub slack: BigRational,
}

impl AdequacyResult {
    pub fn passed(&self) -> bool {
        self.both_converged && self.abs_diff <= self.slack
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lhs": self.lhs.to_string(),
            "rhs": self.rhs.to_string(),
            "abs_diff": self.abs_diff.to_string(),
            "slack": self.slack.to_string(),
            "both_converged": self.both_converged,
            "loop_free": self.loop_free,
            "passed": self.passed(),
            "graph": self.graph_report.to_json(),
            "denotational": self.denot_report.to_json(),
        })
    }
}

fn pairing(f: &Expectation, d: &Dist) -> Result<BigRational, DenotError> {
    let mut sum = BigRational::zero();
    for (s, w) in d.iter() {
        sum += f.eval(s)? * w.value();
    }
    Ok(sum)
}

fn slack(graph: &ConvergenceReport, denot: &ConvergenceReport, fmax: &BigRational, tol: &BigRational) -> BigRational {
    if graph.criterion == Criterion::Exact && denot.criterion == Criterion::Exact {
        return BigRational::zero();
    }
    let one = BigRational::from_integer(1.into());
    (one + fmax) * (&graph.residual + &denot.residual) + tol * BigRational::from_integer(2.into())
}

/// Evaluates both sides of the agreement for `stmt`, `f_after` and `d`.
///
/// With loops, each side is a limit from below and is only approximated; the
/// result then carries a slack derived from the two reports, scaled by the
/// largest value of `f_after` seen on the output support.
pub fn check_adequacy(
    stmt: &Stmt,
    universe: &Universe,
    f_after: &Expectation,
    d: &Dist,
    rule: &StopRule,
) -> Result<AdequacyResult, AdequacyError> {
    let engine = Engine::new(translate_stmt(stmt, universe))?;
    let (d_out, graph_report) = engine.run_graph(d, rule)?;
    let rhs = pairing(f_after, &d_out)?;

    let ev = Evaluator::new(stmt, f_after, rule.clone());
    let mut lhs = BigRational::zero();
    for (s, w) in d.iter() {
        lhs += ev.value_at(s)? * w.value();
    }
    let denot_report = ev.report();

    let mut fmax = BigRational::zero();
    for s in d_out.support() {
        fmax = fmax.max(f_after.eval(s)?);
    }
    let loop_free = stmt.is_loop_free();
    Ok(AdequacyResult {
        abs_diff: (&lhs - &rhs).abs(),
        slack: slack(&graph_report, &denot_report, &fmax, &rule.tol),
        both_converged: graph_report.converged && denot_report.converged,
        lhs,
        rhs,
        loop_free,
        graph_report,
        denot_report,
    })
}

/// `(⟦stmt⟧ f_after)(s0)` computed from the graph side only: runs the graph
/// on the point mass at `s0` and pairs the result with `f_after`.
pub fn retrieve_expectation(
    stmt: &Stmt,
    universe: &Universe,
    f_after: &Expectation,
    s0: &Store,
    rule: &StopRule,
) -> Result<(BigRational, ConvergenceReport), AdequacyError> {
    let engine = Engine::new(translate_stmt(stmt, universe))?;
    let (d_out, report) = engine.run_graph(&Dist::point(s0.clone()), rule)?;
    Ok((pairing(f_after, &d_out)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denotational::expect;
    use crate::gallery::{self, LoopBody};
    use crate::store::Weight;
    use crate::syntax::{parse_stmt, Expr};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn conditioned_pair_agrees_exactly() {
        let p = gallery::p1();
        let f = Expectation::Expr(p.ret.clone());
        for s in [Store::zeros(2), Store::from_values([7, -1])] {
            let res = check_adequacy(&p.body, &p.universe, &f, &Dist::point(s.clone()), &StopRule::default()).unwrap();
            assert_eq!((res.lhs.clone(), res.rhs.clone()), (r(1, 2), r(1, 2)));
            assert!(res.loop_free && res.passed() && res.slack.is_zero());
            let (v, _) = retrieve_expectation(&p.body, &p.universe, &f, &s, &StopRule::default()).unwrap();
            assert_eq!(v, r(1, 2));
        }
    }

    #[test]
    fn skip_agrees_on_any_input() {
        let u = gallery::xy();
        let d = Dist::from_entries([
            (Store::from_values([1, 2]), Weight::ratio(1, 3)),
            (Store::from_values([4, 0]), Weight::ratio(1, 2)),
        ]);
        let f = Expectation::Expr(Expr::Var(gallery::X));
        let res = check_adequacy(&Stmt::Skip, &u, &f, &d, &StopRule::default()).unwrap();
        assert_eq!(res.lhs, r(7, 3));
        assert_eq!(res.lhs, res.rhs);
    }

    #[test]
    fn loop_variants_agree() {
        for body in LoopBody::ALL {
            let p = gallery::p2(body);
            let f = Expectation::Expr(p.ret.clone());
            let res =
                check_adequacy(&p.body, &p.universe, &f, &Dist::point(p.universe.bottom()), &StopRule::default())
                    .unwrap();
            assert!(!res.loop_free);
            assert!(res.passed(), "{body:?}: {res:?}");
            if body == LoopBody::Increment {
                assert_eq!(res.lhs, res.rhs);
                assert!(res.slack.is_zero());
            }
        }
    }

    #[test]
    fn deterministic_statements() {
        let u = gallery::xy();
        let f = Expectation::Expr(Expr::Var(gallery::Y));
        let rule = StopRule::default();
        let s0 = Store::from_values([0, 0]);
        let s = parse_stmt("x := 4; while y < x { y := y + 1 }", &u).unwrap();
        assert_eq!(retrieve_expectation(&s, &u, &f, &s0, &rule).unwrap().0, r(4, 1));
        let s = parse_stmt("while true { skip }", &u).unwrap();
        let (v, _) = retrieve_expectation(&s, &u, &f, &s0, &rule).unwrap();
        assert!(v.is_zero());
        assert_eq!(expect(&s, &f, &s0, &rule).unwrap().0, v);
    }
}
