//! The expectation-transformer semantics of statements, evaluated pointwise.
//!
//! `⟦S⟧F` is never built as a function. Evaluation runs in
//! continuation-passing style from one store: the continuation says what to
//! do with the store after the current statement, and each distinct
//! continuation is interned so that its value at a store is computed once.
//!
//! A `while` loop is evaluated as the limit of its iterates `F_k`. The
//! continuation "the loop at level `j`" computes `F_j`; at level 0 it yields
//! 0 and records the store as cut off. The probability cut off at the
//! horizon plays the role of the residual in [`crate::convergence`]: for a
//! post-expectation bounded by `c` it bounds the error by `c` times the
//! residual. Values are exact rationals throughout.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::convergence::{ConvergenceReport, StopRule};
use crate::store::{Dist, Store, Weight};
use crate::syntax::{BoolExpr, EvalError, Expr, Program, Stmt};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DenotError {
    #[error("evaluation failed at store {store:?}: {error}")]
    Eval { store: Store, error: EvalError },
    #[error("return expression is negative ({value}) at store {store:?}")]
    NegativeReturn { store: Store, value: BigInt },
    #[error("normalization undefined: no run passes every observation and terminates")]
    NormalizationUndefined,
}

/// A non-negative valuation of stores, evaluated on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    /// A non-negative constant; `Const(1)` measures termination probability.
    Const(BigRational),
    /// `⟦E⟧s`; a negative value is an error, never clamped.
    Expr(Expr),
    /// 1 where the condition holds, 0 elsewhere.
    Indicator(BoolExpr),
    Scaled(BigRational, Box<Expectation>),
    Sum(Box<Expectation>, Box<Expectation>),
}

impl Expectation {
    pub fn one() -> Self {
        Expectation::Const(BigRational::from_integer(1.into()))
    }

    pub fn scaled(self, c: BigRational) -> Self {
        Expectation::Scaled(c, Box::new(self))
    }

    pub fn plus(self, other: Expectation) -> Self {
        Expectation::Sum(Box::new(self), Box::new(other))
    }

    pub fn eval(&self, s: &Store) -> Result<BigRational, DenotError> {
        let eval_err = |error| DenotError::Eval { store: s.clone(), error };
        Ok(match self {
            Expectation::Const(c) => c.clone(),
            Expectation::Expr(e) => {
                let v = e.eval(s).map_err(eval_err)?;
                if v.is_negative() {
                    return Err(DenotError::NegativeReturn { store: s.clone(), value: v });
                }
                BigRational::from_integer(v)
            }
            Expectation::Indicator(b) => {
                BigRational::from_integer(BigInt::from(b.eval(s).map_err(eval_err)? as u8))
            }
            Expectation::Scaled(c, f) => c * f.eval(s)?,
            Expectation::Sum(f, g) => f.eval(s)? + g.eval(s)?,
        })
    }
}

/// `while⟨k⟩`: the loop unrolled `k` times, with `observe(false)` at the bottom.
pub fn unrolled_while(b: &BoolExpr, body: &Stmt, k: usize) -> Stmt {
    let mut out = Stmt::Observe(BoolExpr::Lit(false));
    for _ in 0..k {
        out = Stmt::if_else(b.clone(), Stmt::seq(body.clone(), out), Stmt::Skip);
    }
    out
}

type ContId = usize;
type FrameId = usize;

/// A statement compared and hashed by address.
#[derive(Clone, Copy, Debug)]
struct At<'p>(&'p Stmt);

impl PartialEq for At<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for At<'_> {}

impl std::hash::Hash for At<'_> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        std::ptr::hash(self.0, state)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Cont<'p> {
    Done,
    /// Run the statement, then continue.
    Then(At<'p>, ContId),
    /// `F_j` of the loop frame.
    Loop(FrameId, usize),
}

struct Frame<'p> {
    cond: &'p BoolExpr,
    body: &'p Stmt,
    outer: ContId,
}

/// A value together with the probability cut off per loop frame.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Val {
    value: BigRational,
    pending: BTreeMap<FrameId, Dist>,
}

impl Val {
    fn of(value: BigRational) -> Self {
        Val { value, pending: BTreeMap::new() }
    }

    fn add_scaled(&mut self, other: &Val, w: &Weight) {
        self.value += w.value() * &other.value;
        for (f, d) in &other.pending {
            self.pending.entry(*f).or_default().add_assign(&d.scale(w));
        }
    }
}

/// Pointwise evaluator of `⟦stmt⟧ f_after`, sharing work across stores.
pub struct Evaluator<'p> {
    stmt: &'p Stmt,
    f_after: &'p Expectation,
    rule: StopRule,
    conts: RefCell<Vec<Cont<'p>>>,
    intern: RefCell<HashMap<Cont<'p>, ContId>>,
    frames: RefCell<Vec<Frame<'p>>>,
    frame_ids: RefCell<HashMap<(At<'p>, ContId), FrameId>>,
    memo: RefCell<HashMap<(ContId, Store), Val>>,
    limits: RefCell<HashMap<(FrameId, Store), Val>>,
    report: RefCell<ConvergenceReport>,
}

impl fmt::Debug for Evaluator<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator").field("stmt", self.stmt).field("rule", &self.rule).finish()
    }
}

impl<'p> Evaluator<'p> {
    pub fn new(stmt: &'p Stmt, f_after: &'p Expectation, rule: StopRule) -> Self {
        Evaluator {
            stmt,
            f_after,
            rule,
            conts: RefCell::new(vec![Cont::Done]),
            intern: RefCell::new(HashMap::from([(Cont::Done, 0)])),
            frames: RefCell::new(Vec::new()),
            frame_ids: RefCell::new(HashMap::new()),
            memo: RefCell::new(HashMap::new()),
            limits: RefCell::new(HashMap::new()),
            report: RefCell::new(ConvergenceReport::exact(0)),
        }
    }

    /// `(⟦stmt⟧ f_after)(s)`.
    pub fn value_at(&self, s: &Store) -> Result<BigRational, DenotError> {
        Ok(self.run(self.stmt, 0, s)?.value)
    }

    /// Combined report of every loop evaluated so far.
    pub fn report(&self) -> ConvergenceReport {
        self.report.borrow().clone()
    }

    fn cont(&self, c: Cont<'p>) -> ContId {
        if let Some(id) = self.intern.borrow().get(&c) {
            return *id;
        }
        let mut conts = self.conts.borrow_mut();
        conts.push(c);
        let id = conts.len() - 1;
        self.intern.borrow_mut().insert(c, id);
        id
    }

    fn frame(&self, stmt: &'p Stmt, cond: &'p BoolExpr, body: &'p Stmt, outer: ContId) -> FrameId {
        let key = (At(stmt), outer);
        if let Some(id) = self.frame_ids.borrow().get(&key) {
            return *id;
        }
        let mut frames = self.frames.borrow_mut();
        frames.push(Frame { cond, body, outer });
        let id = frames.len() - 1;
        self.frame_ids.borrow_mut().insert(key, id);
        id
    }

    fn run(&self, stmt: &'p Stmt, k: ContId, s: &Store) -> Result<Val, DenotError> {
        let eval_err = |error| DenotError::Eval { store: s.clone(), error };
        match stmt {
            Stmt::Skip => self.apply(k, s),
            Stmt::Assign(x, e) => self.apply(k, &s.with(*x, e.eval(s).map_err(eval_err)?)),
            Stmt::RAssign(x, psi) => {
                let mut out = Val::default();
                for (z, p) in psi.entries() {
                    out.add_scaled(&self.apply(k, &s.with(*x, z.clone()))?, &p);
                }
                Ok(out)
            }
            Stmt::Observe(b) => {
                if b.eval(s).map_err(eval_err)? {
                    self.apply(k, s)
                } else {
                    Ok(Val::default())
                }
            }
            Stmt::Seq(a, b) => {
                let next = self.cont(Cont::Then(At(b), k));
                self.run(a, next, s)
            }
            Stmt::If(c, a, b) => {
                if c.eval(s).map_err(eval_err)? {
                    self.run(a, k, s)
                } else {
                    self.run(b, k, s)
                }
            }
            Stmt::While(c, body) => {
                let frame = self.frame(stmt, c, body, k);
                self.limit(frame, s)
            }
        }
    }

    fn apply(&self, k: ContId, s: &Store) -> Result<Val, DenotError> {
        let key = (k, s.clone());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let cont = self.conts.borrow()[k];
        let v = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || match cont {
            Cont::Done => Ok(Val::of(self.f_after.eval(s)?)),
            Cont::Then(At(stmt), next) => self.run(stmt, next, s),
            Cont::Loop(frame, j) => self.level(frame, j, s),
        })?;
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    /// `F_j(s)` of the loop frame.
    fn level(&self, frame: FrameId, j: usize, s: &Store) -> Result<Val, DenotError> {
        if j == 0 {
            return Ok(Val { value: BigRational::zero(), pending: BTreeMap::from([(frame, Dist::point(s.clone()))]) });
        }
        let (cond, body, outer) = {
            let f = &self.frames.borrow()[frame];
            (f.cond, f.body, f.outer)
        };
        if cond.eval(s).map_err(|error| DenotError::Eval { store: s.clone(), error })? {
            let next = self.cont(Cont::Loop(frame, j - 1));
            self.run(body, next, s)
        } else {
            self.apply(outer, s)
        }
    }

    /// The loop value at `s`, iterating `F_1, F_2, …` under the stop rule.
    fn limit(&self, frame: FrameId, s: &Store) -> Result<Val, DenotError> {
        if let Some(v) = self.limits.borrow().get(&(frame, s.clone())) {
            return Ok(v.clone());
        }
        let own = |v: &Val| v.pending.get(&frame).cloned().unwrap_or_default();
        let mut prev = Val { value: BigRational::zero(), pending: BTreeMap::from([(frame, Dist::point(s.clone()))]) };
        let mut result = None;
        for k in 1..=self.rule.max_k.max(1) {
            let cur = self.apply(self.cont(Cont::Loop(frame, k)), s)?;
            let delta = (&cur.value - &prev.value).abs();
            let report = ConvergenceReport::classify(
                k,
                &cur.value - &prev.value,
                delta,
                own(&cur).mass().into_inner(),
                own(&cur) == own(&prev),
                &self.rule,
            );
            if report.converged || k >= self.rule.max_k {
                self.report.borrow_mut().absorb(&report);
                result = Some(cur);
                break;
            }
            prev = cur;
        }
        let mut v = result.expect("at least one iterate");
        v.pending.remove(&frame);
        self.limits.borrow_mut().insert((frame, s.clone()), v.clone());
        Ok(v)
    }

    /// `F_k(s)` for a top-level `while` statement: the k-th iterate, without
    /// taking the limit of this loop. Loops nested in its body still iterate
    /// to their own limits.
    ///
    /// # Panics
    /// If the evaluator's statement is not a `while` loop.
    pub fn iterate_at(&self, k: usize, s: &Store) -> Result<BigRational, DenotError> {
        let Stmt::While(c, body) = self.stmt else {
            panic!("iterate_at needs a while statement");
        };
        let frame = self.frame(self.stmt, c, body, 0);
        Ok(self.apply(self.cont(Cont::Loop(frame, k)), s)?.value)
    }
}

/// `(⟦stmt⟧ f_after)(s)` with its convergence report.
pub fn expect(
    stmt: &Stmt,
    f_after: &Expectation,
    s: &Store,
    rule: &StopRule,
) -> Result<(BigRational, ConvergenceReport), DenotError> {
    let ev = Evaluator::new(stmt, f_after, rule.clone());
    let v = ev.value_at(s)?;
    Ok((v, ev.report()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub value: BigRational,
    pub numerator: BigRational,
    pub denominator: BigRational,
    pub report: ConvergenceReport,
}

/// Numerator and denominator without dividing; both evaluated from `⊥`.
pub fn raw_semantics(p: &Program, rule: &StopRule) -> Result<(BigRational, BigRational, ConvergenceReport), DenotError> {
    let bottom = p.universe.bottom();
    let ret = Expectation::Expr(p.ret.clone());
    let (numerator, mut report) = expect(&p.body, &ret, &bottom, rule)?;
    let (denominator, r2) = expect(&p.body, &Expectation::one(), &bottom, rule)?;
    report.absorb(&r2);
    Ok((numerator, denominator, report))
}

/// `⟦S⟧(⟦E⟧)(⊥) / ⟦S⟧(1)(⊥)`.
pub fn normalized_semantics(p: &Program, rule: &StopRule) -> Result<Normalized, DenotError> {
    let (numerator, denominator, report) = raw_semantics(p, rule)?;
    if denominator.is_zero() {
        return Err(DenotError::NormalizationUndefined);
    }
    Ok(Normalized { value: &numerator / &denominator, numerator, denominator, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence::Criterion;
    use crate::gallery::{self, LoopBody};
    use crate::syntax::{parse_program, parse_stmt};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn conditioned_pair() {
        let p = gallery::p1();
        let rule = StopRule::default();
        let s = Store::zeros(2);
        let (v, report) = expect(&p.body, &Expectation::Expr(p.ret.clone()), &s, &rule).unwrap();
        assert_eq!(v, r(8, 16));
        assert_eq!(report.criterion, Criterion::Exact);
        let (v, _) = expect(&p.body, &Expectation::one(), &s, &rule).unwrap();
        assert_eq!(v, r(3, 16));
        let n = normalized_semantics(&p, &rule).unwrap();
        assert_eq!((n.value, n.numerator, n.denominator), (r(8, 3), r(1, 2), r(3, 16)));
    }

    #[test]
    fn skip_is_identity() {
        let f = Expectation::Expr(Expr::Var(1));
        let s = Store::from_values([4, 9]);
        assert_eq!(expect(&Stmt::Skip, &f, &s, &StopRule::default()).unwrap().0, r(9, 1));
    }

    #[test]
    fn normalization_edge_cases() {
        let p = parse_program("var x; observe(false); return x").unwrap();
        assert!(matches!(
            normalized_semantics(&p, &StopRule::default()),
            Err(DenotError::NormalizationUndefined)
        ));
        let p = parse_program("var x; x := 5; return x").unwrap();
        let n = normalized_semantics(&p, &StopRule::default()).unwrap();
        assert_eq!((n.value, n.numerator, n.denominator), (r(5, 1), r(5, 1), r(1, 1)));
    }

    #[test]
    fn negative_returns_are_rejected() {
        let p = parse_program("var x; x := 0 - 2; return x").unwrap();
        assert!(matches!(
            normalized_semantics(&p, &StopRule::default()),
            Err(DenotError::NegativeReturn { .. })
        ));
    }

    #[test]
    fn loop_variants() {
        let rule = StopRule::default();
        // constant body: x in {2, 3} never leaves the loop
        let n = normalized_semantics(&gallery::p2(LoopBody::Constant), &rule).unwrap();
        assert_eq!((n.numerator.clone(), n.denominator.clone()), (r(1, 4), r(1, 2)));
        assert_eq!(n.value, r(1, 2));
        assert!(n.report.converged);
        // increment body terminates exactly
        let n = normalized_semantics(&gallery::p2(LoopBody::Increment), &rule).unwrap();
        assert_eq!(n.value, r(3, 2));
        assert_eq!(n.report.criterion, Criterion::Exact);
        // resample body terminates with probability one in the limit
        let n = normalized_semantics(&gallery::p2(LoopBody::Resample), &rule).unwrap();
        assert!((n.value - r(3, 2)).abs() <= r(1, 1_000_000));
        assert_eq!(n.report.criterion, Criterion::Certified);
    }

    #[test]
    fn stalled_iterates_do_not_stop_early() {
        let p = parse_program("var y; while y < 3 { y := y + 1 }; return y").unwrap();
        let n = normalized_semantics(&p, &StopRule::default()).unwrap();
        assert_eq!(n.value, r(3, 1));
        assert_eq!(n.report.criterion, Criterion::Exact);
        assert_eq!(n.report.iterations_used, 4);
    }

    #[test]
    fn unrolling_matches_iterates() {
        let u = gallery::xy();
        let w = parse_stmt("while x < 3 { x ~ {1: 1/2, 2: 1/4, 4: 1/4}; y := y + x }", &u).unwrap();
        let Stmt::While(c, body) = &w else { unreachable!() };
        let f = Expectation::Expr(Expr::Var(1));
        let rule = StopRule::default();
        let ev = Evaluator::new(&w, &f, rule.clone());
        let s = Store::zeros(2);
        let mut prev = BigRational::zero();
        for k in 0..7 {
            let direct = ev.iterate_at(k, &s).unwrap();
            let unrolled = expect(&unrolled_while(c, body, k), &f, &s, &rule).unwrap().0;
            assert_eq!(direct, unrolled, "k = {k}");
            assert!(direct >= prev);
            prev = direct;
        }
        assert_eq!(unrolled_while(c, body, 0), Stmt::Observe(BoolExpr::Lit(false)));
    }

    #[test]
    fn nonterminating_loop_gives_zero() {
        let p = parse_program("var x; x := 1; while true { skip }; return x").unwrap();
        let (num, den, report) = raw_semantics(&p, &StopRule::default()).unwrap();
        assert!(num.is_zero() && den.is_zero());
        assert_eq!(report.criterion, Criterion::Stationary);
    }
}
