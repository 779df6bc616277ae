//! Forward rejection sampling of programs, as an independent statistical
//! check on both exact semantics.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Runs are grouped in shards of
//! [`SHARD_SIZE`]; shard `i` uses the seeded generator advanced by `i`
//! jumps of 2^128 steps, so the report depends only on `(seed, n)` and not
//! on how shards are scheduled.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::syntax::{DistSpec, EvalError, Program, Stmt, Universe};
use crate::store::Store;

pub const SHARD_SIZE: u64 = 1024;
pub const DEFAULT_STEP_BOUND: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("evaluation failed at store {store:?}: {error}")]
    Eval { store: Store, error: EvalError },
    #[error("return expression is negative ({value}) at store {store:?}")]
    NegativeReturn { store: Store, value: BigInt },
    #[error("distribution {0} has a common denominator above 2^128")]
    DenominatorTooLarge(String),
    #[error("the number of runs and the step bound must be positive")]
    EmptyRun,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleReport {
    pub seed: u64,
    pub n_total: u64,
    pub n_accepted: u64,
    pub n_rejected_observe: u64,
    pub n_step_bound_hit: u64,
    /// Final-store frequencies over all runs; sums to the acceptance rate.
    pub empirical_end_dist: BTreeMap<Store, BigRational>,
    /// Mean return value over accepted runs; `None` when no run was accepted.
    pub empirical_normalized_expectation: Option<BigRational>,
}

impl SampleReport {
    pub fn acceptance_rate(&self) -> BigRational {
        BigRational::new(self.n_accepted.into(), self.n_total.into())
    }

    pub fn to_json(&self, universe: &Universe) -> Value {
        let entries: Vec<Value> = self
            .empirical_end_dist
            .iter()
            .map(|(s, f)| {
                let store: Vec<Value> = s.values().iter().map(json_int).collect();
                json!({"store": store, "frequency": f.to_string()})
            })
            .collect();
        json!({
            "seed": self.seed,
            "n_total": self.n_total,
            "n_accepted": self.n_accepted,
            "n_rejected_observe": self.n_rejected_observe,
            "n_step_bound_hit": self.n_step_bound_hit,
            "acceptance_rate": self.acceptance_rate().to_string(),
            "empirical_normalized_expectation": self.empirical_normalized_expectation.as_ref().map(|v| v.to_string()),
            "expectation_defined": self.empirical_normalized_expectation.is_some(),
            "universe": universe.names(),
            "empirical_end_dist": entries,
        })
    }
}

fn json_int(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(i) => json!(i),
        None => json!(v.to_string()),
    }
}

/// Inverse-CDF table over integer cumulative weights with a common denominator.
struct Table {
    total: u128,
    cumulative: Vec<(u128, BigInt)>,
}

impl Table {
    fn new(psi: &DistSpec) -> Result<Table, SampleError> {
        let too_large = || SampleError::DenominatorTooLarge(psi.to_string());
        let lcm = psi
            .raw_entries()
            .iter()
            .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
        let total = lcm.to_u128().ok_or_else(too_large)?;
        let mut acc = 0u128;
        let mut cumulative = Vec::new();
        for (v, w) in psi.raw_entries() {
            let share = (w * BigRational::from_integer(lcm.clone())).to_integer();
            acc += share.to_u128().ok_or_else(too_large)?;
            cumulative.push((acc, v.clone()));
        }
        Ok(Table { total, cumulative })
    }

    fn draw(&self, rng: &mut Xoshiro256PlusPlus) -> &BigInt {
        let u = rng.random_range(0..self.total);
        &self.cumulative.iter().find(|(c, _)| u < *c).expect("u below the total").1
    }
}

fn collect_tables(stmt: &Stmt, out: &mut HashMap<usize, Table>) -> Result<(), SampleError> {
    match stmt {
        Stmt::RAssign(_, psi) => {
            out.insert(psi as *const DistSpec as usize, Table::new(psi)?);
        }
        Stmt::Seq(a, b) | Stmt::If(_, a, b) => {
            collect_tables(a, out)?;
            collect_tables(b, out)?;
        }
        Stmt::While(_, body) => collect_tables(body, out)?,
        _ => {}
    }
    Ok(())
}

enum Fate {
    Accepted(Store),
    Rejected,
    StepBound,
}

fn simulate(
    p: &Program,
    tables: &HashMap<usize, Table>,
    rng: &mut Xoshiro256PlusPlus,
    step_bound: u64,
) -> Result<Fate, SampleError> {
    let mut s = p.universe.bottom();
    let mut stack: Vec<&Stmt> = vec![&p.body];
    let mut steps = 0u64;
    while let Some(stmt) = stack.pop() {
        if steps >= step_bound {
            return Ok(Fate::StepBound);
        }
        let err = |s: &Store, error| SampleError::Eval { store: s.clone(), error };
        match stmt {
            Stmt::Seq(a, b) => {
                stack.push(b);
                stack.push(a);
                continue;
            }
            Stmt::Skip => {}
            Stmt::Assign(x, e) => {
                let z = e.eval(&s).map_err(|e| err(&s, e))?;
                s = s.with(*x, z);
            }
            Stmt::RAssign(x, psi) => {
                let z = tables[&(psi as *const DistSpec as usize)].draw(rng).clone();
                s = s.with(*x, z);
            }
            Stmt::Observe(b) => {
                if !b.eval(&s).map_err(|e| err(&s, e))? {
                    return Ok(Fate::Rejected);
                }
            }
            Stmt::If(c, a, b) => {
                stack.push(if c.eval(&s).map_err(|e| err(&s, e))? { a } else { b });
            }
            Stmt::While(c, body) => {
                if c.eval(&s).map_err(|e| err(&s, e))? {
                    stack.push(stmt);
                    stack.push(body);
                }
            }
        }
        steps += 1;
    }
    Ok(Fate::Accepted(s))
}

#[derive(Default)]
struct Tally {
    accepted: u64,
    rejected: u64,
    bound: u64,
    ends: BTreeMap<Store, u64>,
    return_sum: BigInt,
}

impl Tally {
    fn merge(&mut self, other: Tally) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.bound += other.bound;
        for (s, c) in other.ends {
            *self.ends.entry(s).or_default() += c;
        }
        self.return_sum += other.return_sum;
    }
}

fn run_shard(
    p: &Program,
    tables: &HashMap<usize, Table>,
    seed: u64,
    shard: u64,
    runs: u64,
    step_bound: u64,
) -> Result<Tally, SampleError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..shard {
        rng.jump();
    }
    let mut t = Tally::default();
    for _ in 0..runs {
        match simulate(p, tables, &mut rng, step_bound)? {
            Fate::Accepted(s) => {
                let v = p.ret.eval(&s).map_err(|error| SampleError::Eval { store: s.clone(), error })?;
                if v.sign() == Sign::Minus {
                    return Err(SampleError::NegativeReturn { store: s, value: v });
                }
                t.accepted += 1;
                t.return_sum += v;
                *t.ends.entry(s).or_default() += 1;
            }
            Fate::Rejected => t.rejected += 1,
            Fate::StepBound => t.bound += 1,
        }
    }
    Ok(t)
}

fn shards(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(SHARD_SIZE))
        .map(|i| (i, SHARD_SIZE.min(n - i * SHARD_SIZE)))
        .collect()
}

fn finish(seed: u64, n: u64, t: Tally) -> SampleReport {
    let total = BigInt::from(n);
    SampleReport {
        seed,
        n_total: n,
        n_accepted: t.accepted,
        n_rejected_observe: t.rejected,
        n_step_bound_hit: t.bound,
        empirical_end_dist: t
            .ends
            .into_iter()
            .map(|(s, c)| (s, BigRational::new(c.into(), total.clone())))
            .collect(),
        empirical_normalized_expectation: (t.accepted > 0)
            .then(|| BigRational::new(t.return_sum, t.accepted.into())),
    }
}

fn prepare(p: &Program, n: u64, step_bound: u64) -> Result<HashMap<usize, Table>, SampleError> {
    if n == 0 || step_bound == 0 {
        return Err(SampleError::EmptyRun);
    }
    let mut tables = HashMap::new();
    collect_tables(&p.body, &mut tables)?;
    Ok(tables)
}

/// `n` forward runs from `⊥`, one shard after another.
pub fn sample_program(p: &Program, n: u64, seed: u64, step_bound: u64) -> Result<SampleReport, SampleError> {
    let tables = prepare(p, n, step_bound)?;
    let mut total = Tally::default();
    for (i, runs) in shards(n) {
        total.merge(run_shard(p, &tables, seed, i, runs, step_bound)?);
    }
    Ok(finish(seed, n, total))
}

/// As [`sample_program`], with shards spread over the rayon pool. The report
/// is identical to the sequential one.
pub fn sample_program_parallel(p: &Program, n: u64, seed: u64, step_bound: u64) -> Result<SampleReport, SampleError> {
    let tables = prepare(p, n, step_bound)?;
    let tallies: Vec<Tally> = shards(n)
        .into_par_iter()
        .map(|(i, runs)| run_shard(p, &tables, seed, i, runs, step_bound))
        .collect::<Result<_, _>>()?;
    let mut total = Tally::default();
    for t in tallies {
        total.merge(t);
    }
    Ok(finish(seed, n, total))
}
