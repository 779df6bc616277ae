//! The fixed-point semantics of a graph: `ω_k(v, v′)` evaluated on concrete
//! distributions, and its limit `ω` by iteration over `k`.
//!
//! Evaluation recurses on the structure given by first proper
//! postdominators. At a cycle-inducing branch the recursion drops to level
//! `k − 1`, and at level 0 it returns nothing; what was dropped there is
//! kept as the *frontier*, whose mass bounds `ω − ω_k` from above.
//!
//! Every `ω_k(v, v′)` is additive and multiplicative, so results are
//! memoized per single store and scaled back up.

use std::collections::{BTreeMap, HashMap};
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;
use num_rational::BigRational;
use num_traits::Zero;

use crate::analysis::{Analysis, AnalysisError};
use crate::convergence::{ConvergenceReport, StopRule};
use crate::pcfg::{NodeId, NodeLabel, Pcfg};
use crate::store::{apply_assign, apply_rassign, select, select_not, Dist, Store, Weight};
use crate::syntax::EvalError;

pub const DEFAULT_MEMO_CAPACITY: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("({0}, {1}) is not a postdominator pair")]
    NotPostdominated(NodeId, NodeId),
    #[error("evaluating node {node} at store {store}: {error}")]
    Eval { node: NodeId, store: String, error: EvalError },
}

/// Mass that reached level 0, by the `(v, v′)` pair that dropped it.
pub type Frontier = BTreeMap<(NodeId, NodeId), Dist>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub dist: Dist,
    pub frontier: Frontier,
}

impl Outcome {
    /// `mass` of the frontier: an upper bound on `‖ω(d) − ω_k(d)‖`.
    pub fn residual(&self) -> Weight {
        self.frontier.values().map(Dist::mass).sum()
    }

    fn add_scaled(&mut self, other: &Outcome, w: &Weight) {
        self.dist.add_assign(&other.dist.scale(w));
        for (key, d) in &other.frontier {
            self.frontier.entry(*key).or_default().add_assign(&d.scale(w));
        }
    }

    fn absorb(&mut self, other: Outcome) {
        self.dist.add_assign(&other.dist);
        for (key, d) in other.frontier {
            self.frontier.entry(key).or_default().add_assign(&d);
        }
    }
}

type Key = (usize, NodeId, NodeId, Store);
type ExactKey = (NodeId, NodeId, Store);

pub struct Engine {
    graph: Pcfg,
    analysis: Analysis,
    memo: Mutex<LruCache<Key, Arc<Outcome>>>,
    /// Results with an empty frontier, valid at every level from the stored one up.
    exact: Mutex<HashMap<ExactKey, (usize, Arc<Outcome>)>>,
}

impl Engine {
    pub fn new(graph: Pcfg) -> Result<Self, SemanticsError> {
        Engine::with_capacity(graph, DEFAULT_MEMO_CAPACITY)
    }

    pub fn with_capacity(graph: Pcfg, memo_capacity: usize) -> Result<Self, SemanticsError> {
        let analysis = Analysis::new(&graph)?;
        Ok(Engine::from_parts(graph, analysis, memo_capacity))
    }

    pub fn from_parts(graph: Pcfg, analysis: Analysis, memo_capacity: usize) -> Self {
        let cap = NonZeroUsize::new(memo_capacity.max(1)).expect("positive capacity");
        Engine {
            graph,
            analysis,
            memo: Mutex::new(LruCache::new(cap)),
            exact: Mutex::new(HashMap::new()),
        }
    }

    pub fn graph(&self) -> &Pcfg {
        &self.graph
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    fn check_pair(&self, v: NodeId, v2: NodeId) -> Result<(), SemanticsError> {
        if self.analysis.pd().contains(v, v2) {
            Ok(())
        } else {
            Err(SemanticsError::NotPostdominated(v, v2))
        }
    }

    /// `ω_k(v, v2)(d)`.
    pub fn omega_k(&self, k: usize, v: NodeId, v2: NodeId, d: &Dist) -> Result<Dist, SemanticsError> {
        Ok(self.outcome_k(k, v, v2, d)?.dist)
    }

    /// `ω_k(v, v2)(d)` together with the mass dropped at level 0.
    pub fn outcome_k(&self, k: usize, v: NodeId, v2: NodeId, d: &Dist) -> Result<Outcome, SemanticsError> {
        self.check_pair(v, v2)?;
        self.eval(k, v, v2, d)
    }

    fn eval(&self, k: usize, v: NodeId, v2: NodeId, d: &Dist) -> Result<Outcome, SemanticsError> {
        let mut out = Outcome::default();
        for (s, w) in d.iter() {
            let point = self.eval_point(k, v, v2, s)?;
            out.add_scaled(&point, w);
        }
        Ok(out)
    }

    fn eval_point(&self, k: usize, v: NodeId, v2: NodeId, s: &Store) -> Result<Arc<Outcome>, SemanticsError> {
        if let Some((k_min, o)) = self.exact.lock().expect("memo lock").get(&(v, v2, s.clone())) {
            if k >= *k_min {
                return Ok(o.clone());
            }
        }
        let key = (k, v, v2, s.clone());
        if let Some(o) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(o.clone());
        }
        let outcome = Arc::new(stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
            self.compute_point(k, v, v2, s)
        })?);
        if outcome.frontier.is_empty() {
            let mut exact = self.exact.lock().expect("memo lock");
            let slot = exact.entry((v, v2, s.clone())).or_insert((k, outcome.clone()));
            if k < slot.0 {
                *slot = (k, outcome.clone());
            }
        }
        self.memo.lock().expect("memo lock").put(key, outcome.clone());
        Ok(outcome)
    }

    fn compute_point(&self, k: usize, v: NodeId, v2: NodeId, s: &Store) -> Result<Outcome, SemanticsError> {
        let point = Dist::point(s.clone());
        if k == 0 {
            return Ok(Outcome { dist: Dist::zero(), frontier: BTreeMap::from([((v, v2), point)]) });
        }
        if v == v2 {
            return Ok(Outcome { dist: point, frontier: Frontier::new() });
        }
        let next = self.analysis.fppd(v).expect("v is not End when v != v2");
        if next != v2 {
            let first = self.eval(k, v, next, &point)?;
            let mut second = self.eval(k, next, v2, &first.dist)?;
            for (key, d) in first.frontier {
                second.frontier.entry(key).or_default().add_assign(&d);
            }
            return Ok(second);
        }
        let eval_err = |error| SemanticsError::Eval {
            node: v,
            store: s.display(self.graph.universe()).to_string(),
            error,
        };
        let step = |dist| Ok(Outcome { dist, frontier: Frontier::new() });
        match self.graph.label(v) {
            NodeLabel::Skip => step(point),
            NodeLabel::Assign(x, e) => step(apply_assign(*x, e, &point).map_err(eval_err)?),
            NodeLabel::RAssign(x, psi) => step(apply_rassign(*x, psi, &point)),
            NodeLabel::Observe(b) => step(select(b, &point).map_err(eval_err)?),
            NodeLabel::Branch(b) => {
                let parts = [
                    select(b, &point).map_err(eval_err)?,
                    select_not(b, &point).map_err(eval_err)?,
                ];
                let succ = self.graph.successors(v);
                let descends = self.analysis.descends(v).expect("branch node");
                let mut out = Outcome::default();
                for i in 0..2 {
                    if parts[i].is_zero() {
                        continue;
                    }
                    let level = if descends[i] { k } else { k - 1 };
                    out.absorb(self.eval(level, succ[i], v2, &parts[i])?);
                }
                Ok(out)
            }
            NodeLabel::Return(_) | NodeLabel::Unlabeled => {
                unreachable!("validated graphs only have these labels on End")
            }
        }
    }

    /// `ω(v, v2)(d)` approximated by iterating `k = 1, 2, …` under `rule`.
    pub fn omega(
        &self,
        v: NodeId,
        v2: NodeId,
        d: &Dist,
        rule: &StopRule,
    ) -> Result<(Dist, ConvergenceReport), SemanticsError> {
        self.omega_traced(v, v2, d, rule, |_, _| {})
    }

    /// As [`Engine::omega`], calling `on_iterate(k, D_k)` after every iterate.
    pub fn omega_traced(
        &self,
        v: NodeId,
        v2: NodeId,
        d: &Dist,
        rule: &StopRule,
        mut on_iterate: impl FnMut(usize, &Dist),
    ) -> Result<(Dist, ConvergenceReport), SemanticsError> {
        self.check_pair(v, v2)?;
        let mut prev = Outcome {
            dist: Dist::zero(),
            frontier: if d.is_zero() { Frontier::new() } else { BTreeMap::from([((v, v2), d.clone())]) },
        };
        on_iterate(0, &prev.dist);
        if rule.max_k == 0 {
            let report = ConvergenceReport::classify(
                0,
                BigRational::zero(),
                BigRational::zero(),
                prev.residual().into_inner(),
                false,
                rule,
            );
            return Ok((prev.dist, report));
        }
        for k in 1..=rule.max_k {
            let cur = self.eval(k, v, v2, d)?;
            on_iterate(k, &cur.dist);
            let mass_delta = cur.dist.mass().into_inner() - prev.dist.mass().into_inner();
            let sup_delta = cur.dist.sup_distance(&prev.dist).into_inner();
            let stationary = cur.frontier == prev.frontier;
            let report = ConvergenceReport::classify(
                k,
                mass_delta,
                sup_delta,
                cur.residual().into_inner(),
                stationary,
                rule,
            );
            if report.converged || k == rule.max_k {
                return Ok((cur.dist, report));
            }
            prev = cur;
        }
        unreachable!("loop returns at k = max_k")
    }

    /// `ω(Start, End)(d0)`.
    pub fn run_graph(&self, d0: &Dist, rule: &StopRule) -> Result<(Dist, ConvergenceReport), SemanticsError> {
        self.omega(self.graph.start(), self.graph.end(), d0, rule)
    }
}
