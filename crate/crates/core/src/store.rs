//! Stores, exact weights, and finite-support distributions over stores.
//!
//! A [`Dist`] is a finite map from [`Store`] to a strictly positive
//! [`Weight`]; zero-weight stores are never present, so two distributions
//! are equal exactly when their maps are equal. The three one-step
//! operators ([`select`], [`apply_assign`], [`apply_rassign`]) are the
//! building blocks every other semantic layer is made of.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::syntax::{BoolExpr, DistSpec, EvalError, Expr, Universe, VarId};

/// Total map from every declared variable to an integer, indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Store(Vec<BigInt>);

impl Store {
    /// The all-zeros store, used as the canonical initial store.
    pub fn zeros(width: usize) -> Self {
        Store(vec![BigInt::zero(); width])
    }

    pub fn from_values<I, T>(values: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Store(values.into_iter().map(Into::into).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, var: VarId) -> &BigInt {
        &self.0[var]
    }

    pub fn values(&self) -> &[BigInt] {
        &self.0
    }

    /// `s[x ↦ z]`
    pub fn with(&self, var: VarId, value: BigInt) -> Store {
        let mut next = self.clone();
        next.0[var] = value;
        next
    }

    pub fn display<'a>(&'a self, universe: &'a Universe) -> impl fmt::Display + 'a {
        StoreDisplay { store: self, universe }
    }
}

struct StoreDisplay<'a> {
    store: &'a Store,
    universe: &'a Universe,
}

impl fmt::Display for StoreDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, value) in self.store.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}↦{}", self.universe.name(i), value)?;
        }
        f.write_str("}")
    }
}

/// Exact non-negative rational, always in reduced form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(BigRational);

impl Weight {
    pub fn zero() -> Self {
        Weight(BigRational::zero())
    }

    pub fn one() -> Self {
        Weight(BigRational::one())
    }

    /// Returns `None` for negative values.
    pub fn new(value: BigRational) -> Option<Self> {
        if value.is_negative() {
            None
        } else {
            Some(Weight(value))
        }
    }

    /// # Panics
    /// If `denom` is zero or the ratio is negative.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Weight::new(BigRational::new(numer.into(), denom.into())).expect("negative weight")
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn abs_diff(&self, other: &Weight) -> Weight {
        Weight((&self.0 - &other.0).abs())
    }

    /// `max(self - other, 0)`
    pub fn saturating_sub(&self, other: &Weight) -> Weight {
        if self.0 > other.0 {
            Weight(&self.0 - &other.0)
        } else {
            Weight::zero()
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for &Weight {
    type Output = Weight;
    fn add(self, rhs: &Weight) -> Weight {
        Weight(&self.0 + &rhs.0)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl Mul for &Weight {
    type Output = Weight;
    fn mul(self, rhs: &Weight) -> Weight {
        Weight(&self.0 * &rhs.0)
    }
}

impl std::iter::Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| acc + w)
    }
}

/// Outcome of [`Dist::concentration`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Concentration<'a> {
    /// The zero distribution: concentrated on every store.
    Empty,
    On(&'a Store),
    Spread,
}

impl Concentration<'_> {
    pub fn is_concentrated(&self) -> bool {
        !matches!(self, Concentration::Spread)
    }
}

/// Finite-support sub-distribution over stores.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Dist {
    entries: BTreeMap<Store, Weight>,
}

impl Dist {
    pub fn zero() -> Self {
        Dist::default()
    }

    pub fn point(store: Store) -> Self {
        Dist::point_weighted(store, Weight::one())
    }

    pub fn point_weighted(store: Store, weight: Weight) -> Self {
        let mut d = Dist::zero();
        d.accumulate(store, weight);
        d
    }

    /// Builds a distribution, summing duplicate stores and dropping zeros.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Store, Weight)>,
    {
        let mut d = Dist::zero();
        for (s, w) in entries {
            d.accumulate(s, w);
        }
        d
    }

    fn accumulate(&mut self, store: Store, weight: Weight) {
        if weight.is_zero() {
            return;
        }
        match self.entries.get_mut(&store) {
            Some(w) => w.0 += weight.0,
            None => {
                self.entries.insert(store, weight);
            }
        }
    }

    /// `D(s)`, zero off the support.
    pub fn weight(&self, store: &Store) -> Weight {
        self.entries.get(store).cloned().unwrap_or_else(Weight::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Store, &Weight)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Store> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `‖D‖`
    pub fn mass(&self) -> Weight {
        self.entries.values().cloned().sum()
    }

    pub fn add(&self, other: &Dist) -> Dist {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Dist) {
        for (s, w) in &other.entries {
            self.accumulate(s.clone(), w.clone());
        }
    }

    pub fn scale(&self, c: &Weight) -> Dist {
        if c.is_zero() {
            return Dist::zero();
        }
        Dist {
            entries: self
                .entries
                .iter()
                .map(|(s, w)| (s.clone(), w * c))
                .collect(),
        }
    }

    pub fn concentration(&self) -> Concentration<'_> {
        let mut it = self.entries.keys();
        match (it.next(), it.next()) {
            (None, _) => Concentration::Empty,
            (Some(s), None) => Concentration::On(s),
            _ => Concentration::Spread,
        }
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &Dist) -> bool {
        self.entries.iter().all(|(s, w)| *w <= other.weight(s))
    }

    /// `max_s |self(s) − other(s)|` over the union of supports.
    pub fn sup_distance(&self, other: &Dist) -> Weight {
        let mut best = Weight::zero();
        for (s, w) in &self.entries {
            let d = w.abs_diff(&other.weight(s));
            if d > best {
                best = d;
            }
        }
        for (s, w) in &other.entries {
            if !self.entries.contains_key(s) && *w > best {
                best = w.clone();
            }
        }
        best
    }

    /// Canonical JSON: stores in lexicographic order, weights as reduced fractions.
    pub fn to_canonical_json(&self, universe: &Universe) -> String {
        let mut out = String::from("{\"universe\":[");
        for (i, name) in universe.names().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&serde_json::to_string(name).expect("string serialization"));
        }
        out.push_str("],\"entries\":[");
        for (i, (s, w)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"store\":[");
            for (j, v) in s.values().iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&v.to_string());
            }
            out.push_str("],\"weight\":\"");
            out.push_str(&w.to_string());
            out.push_str("\"}");
        }
        out.push_str("]}");
        out
    }

    /// Parses the canonical JSON layout; weights may be `"p/q"` strings or integers.
    pub fn from_json(text: &str) -> Result<(Universe, Dist), DistJsonError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| DistJsonError::Json(e.to_string()))?;
        let names = value
            .get("universe")
            .and_then(|u| u.as_array())
            .ok_or(DistJsonError::Shape("missing \"universe\" array"))?
            .iter()
            .map(|n| n.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .ok_or(DistJsonError::Shape("universe entries must be strings"))?;
        let universe = Universe::new(names).map_err(DistJsonError::Universe)?;
        let entries = value
            .get("entries")
            .and_then(|e| e.as_array())
            .ok_or(DistJsonError::Shape("missing \"entries\" array"))?;
        let mut dist = Dist::zero();
        for entry in entries {
            let store = entry
                .get("store")
                .and_then(|s| s.as_array())
                .ok_or(DistJsonError::Shape("entry without \"store\" array"))?;
            if store.len() != universe.len() {
                return Err(DistJsonError::StoreWidth {
                    expected: universe.len(),
                    found: store.len(),
                });
            }
            let values = store
                .iter()
                .map(json_integer)
                .collect::<Option<Vec<BigInt>>>()
                .ok_or(DistJsonError::Shape("store values must be integers"))?;
            let weight = entry
                .get("weight")
                .and_then(json_rational)
                .ok_or(DistJsonError::Shape("weight must be a rational string"))?;
            let weight = Weight::new(weight).ok_or(DistJsonError::NegativeWeight)?;
            dist.accumulate(Store(values), weight);
        }
        Ok((universe, dist))
    }
}

fn json_integer(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from)),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn json_rational(v: &serde_json::Value) -> Option<BigRational> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(|i| BigRational::from_integer(i.into())),
        serde_json::Value::String(s) => crate::rational::parse_fraction(s),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistJsonError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("malformed distribution: {0}")]
    Shape(&'static str),
    #[error("invalid universe: {0}")]
    Universe(String),
    #[error("store has {found} values but the universe declares {expected} variables")]
    StoreWidth { expected: usize, found: usize },
    #[error("negative weight")]
    NegativeWeight,
}

/// `select_B`: keeps exactly the stores satisfying `b`.
pub fn select(b: &BoolExpr, d: &Dist) -> Result<Dist, EvalError> {
    let mut out = Dist::zero();
    for (s, w) in d.iter() {
        if b.eval(s)? {
            out.entries.insert(s.clone(), w.clone());
        }
    }
    Ok(out)
}

/// `select_¬B`
pub fn select_not(b: &BoolExpr, d: &Dist) -> Result<Dist, EvalError> {
    let mut out = Dist::zero();
    for (s, w) in d.iter() {
        if !b.eval(s)? {
            out.entries.insert(s.clone(), w.clone());
        }
    }
    Ok(out)
}

/// `assign_{x:=E}`: `D'(s') = Σ { D(s) | s' = s[x ↦ ⟦E⟧s] }`.
pub fn apply_assign(x: VarId, e: &Expr, d: &Dist) -> Result<Dist, EvalError> {
    let mut out = Dist::zero();
    for (s, w) in d.iter() {
        let z = e.eval(s)?;
        out.accumulate(s.with(x, z), w.clone());
    }
    Ok(out)
}

/// `rassign_{x~ψ}`: `D'(s') = ψ(s'(x)) · Σ { D(s) | s' = s[x ↦ s'(x)] }`.
pub fn apply_rassign(x: VarId, psi: &DistSpec, d: &Dist) -> Dist {
    let mut out = Dist::zero();
    for (s, w) in d.iter() {
        for (z, p) in psi.entries() {
            out.accumulate(s.with(x, z.clone()), w * &p);
        }
    }
    out
}
