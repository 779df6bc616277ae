//! Stopping rules and reports for Kleene iteration.
//!
//! Successive-iterate closeness alone can stall: a loop whose exit needs
//! three rounds produces three identical zero iterates before any mass
//! arrives. Both semantics therefore also track the mass cut off at the
//! iteration horizon (the *residual*), which bounds the distance to the
//! limit from above. A run stops when
//!
//! - the residual is zero ([`Criterion::Exact`]),
//! - the residual is at most the tolerance ([`Criterion::Certified`]),
//! - successive iterates differ by at most the tolerance and the cut-off
//!   part has stopped changing ([`Criterion::Stationary`]); this is the
//!   Cauchy-style rule, and it certifies nothing about the limit,
//! - or the budget runs out ([`Criterion::Budget`]).

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::rational::{inverse_power_of_ten, to_f64};

pub const DEFAULT_MAX_K: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub tol: BigRational,
    pub max_k: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { tol: inverse_power_of_ten(9), max_k: DEFAULT_MAX_K }
    }
}

impl StopRule {
    pub fn new(tol: BigRational, max_k: usize) -> Self {
        StopRule { tol, max_k }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Exact,
    Certified,
    Stationary,
    Budget,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Exact => "exact",
            Criterion::Certified => "certified",
            Criterion::Stationary => "stationary",
            Criterion::Budget => "budget",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub iterations_used: usize,
    /// `mass(D_k) − mass(D_{k−1})`, or the change of the value for expectations.
    pub mass_delta: BigRational,
    /// Largest pointwise change between the last two iterates.
    pub sup_delta: BigRational,
    /// Mass cut off at the horizon of the last iterate: an upper bound on the
    /// distance to the limit.
    pub residual: BigRational,
    pub criterion: Criterion,
    pub converged: bool,
    pub budget_exhausted: bool,
}

impl ConvergenceReport {
    /// The report of a computation that involved no iteration.
    pub fn exact(iterations_used: usize) -> Self {
        ConvergenceReport {
            iterations_used,
            mass_delta: BigRational::zero(),
            sup_delta: BigRational::zero(),
            residual: BigRational::zero(),
            criterion: Criterion::Exact,
            converged: true,
            budget_exhausted: false,
        }
    }

    /// Classifies an iterate. `stationary` says whether the cut-off part is
    /// unchanged from the previous iterate.
    pub fn classify(
        k: usize,
        mass_delta: BigRational,
        sup_delta: BigRational,
        residual: BigRational,
        stationary: bool,
        rule: &StopRule,
    ) -> Self {
        let criterion = if residual.is_zero() {
            Criterion::Exact
        } else if residual <= rule.tol {
            Criterion::Certified
        } else if k >= 2 && stationary && sup_delta <= rule.tol {
            Criterion::Stationary
        } else {
            Criterion::Budget
        };
        let converged = criterion != Criterion::Budget;
        ConvergenceReport {
            iterations_used: k,
            mass_delta,
            sup_delta,
            residual,
            criterion,
            converged,
            budget_exhausted: !converged && k >= rule.max_k,
        }
    }

    /// Whether `residual` certifies the result within `tol`.
    pub fn certified(&self) -> bool {
        matches!(self.criterion, Criterion::Exact | Criterion::Certified)
    }

    /// Folds the report of a nested or sibling computation into this one,
    /// keeping the weakest guarantee.
    pub fn absorb(&mut self, other: &ConvergenceReport) {
        self.iterations_used = self.iterations_used.max(other.iterations_used);
        if other.sup_delta > self.sup_delta {
            self.sup_delta = other.sup_delta.clone();
        }
        if other.mass_delta > self.mass_delta {
            self.mass_delta = other.mass_delta.clone();
        }
        if other.residual > self.residual {
            self.residual = other.residual.clone();
        }
        self.criterion = self.criterion.max(other.criterion);
        self.converged &= other.converged;
        self.budget_exhausted |= other.budget_exhausted;
    }

    pub fn to_json(&self) -> Value {
        json!({
            "iterations": self.iterations_used,
            "mass_delta": self.mass_delta.to_string(),
            "sup_delta": self.sup_delta.to_string(),
            "residual": self.residual.to_string(),
            "criterion": self.criterion.name(),
            "converged": self.converged,
            "budget_exhausted": self.budget_exhausted,
        })
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.converged {
            "converged"
        } else if self.budget_exhausted {
            "budget exhausted"
        } else {
            "not converged"
        };
        write!(
            f,
            "{status} ({}) after {} iterations; sup delta {:.3e}, residual {:.3e}",
            self.criterion,
            self.iterations_used,
            to_f64(&self.sup_delta),
            to_f64(&self.residual)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn classification() {
        let rule = StopRule::new(r(1, 100), 10);
        let c = |k, sup, res, stat| ConvergenceReport::classify(k, r(0, 1), sup, res, stat, &rule);
        assert_eq!(c(1, r(0, 1), r(0, 1), false).criterion, Criterion::Exact);
        assert_eq!(c(3, r(1, 2), r(1, 1000), false).criterion, Criterion::Certified);
        assert_eq!(c(3, r(0, 1), r(1, 2), true).criterion, Criterion::Stationary);
        // a stalled chain with live residual is not converged
        let stalled = c(3, r(0, 1), r(1, 2), false);
        assert!(!stalled.converged && !stalled.budget_exhausted);
        let out = c(10, r(0, 1), r(1, 2), false);
        assert!(out.budget_exhausted && !out.converged);
    }

    #[test]
    fn absorb_keeps_the_weakest() {
        let mut a = ConvergenceReport::exact(2);
        let b = ConvergenceReport::classify(7, r(0, 1), r(0, 1), r(1, 2), true, &StopRule::default());
        a.absorb(&b);
        assert_eq!(a.iterations_used, 7);
        assert_eq!(a.criterion, Criterion::Stationary);
        assert!(a.converged && !a.certified());
    }
}
