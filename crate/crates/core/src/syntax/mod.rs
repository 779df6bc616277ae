//! Structured probabilistic programs: AST, evaluation, parser, printer.
//!
//! Variables are resolved to [`VarId`] indices into a declared
//! [`Universe`] at parse time, so every [`Store`] over that universe is a
//! total valuation and evaluation can only fail on division by zero.
//!
//! The concrete syntax:
//!
//! ```text
//! program := "var" ident+ ";" stmt ";" "return" expr
//! stmt    := "skip" | ident ":=" expr | ident "~" "{" int ":" rat ("," int ":" rat)* "}"
//!          | "observe" "(" bexp ")" | stmt ";" stmt
//!          | "if" bexp "{" stmt "}" "else" "{" stmt "}" | "while" bexp "{" stmt "}"
//! rat     := int | int "/" int
//! ```
//!
//! Sequencing is right-associative and `#` starts a comment.

mod parse;
mod print;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::store::Store;

pub use parse::{parse_bool_expr, parse_expr, parse_program, parse_stmt, ParseError, ParseErrorKind};
pub use print::pretty_print;

/// Index of a variable in its [`Universe`].
pub type VarId = usize;

/// The ordered, duplicate-free set of declared program variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Universe {
    names: Vec<String>,
}

impl Universe {
    pub fn new(names: Vec<String>) -> Result<Self, String> {
        if names.is_empty() {
            return Err("the universe must declare at least one variable".into());
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !is_identifier(n) {
                return Err(format!("`{n}` is not a valid identifier"));
            }
            if !seen.insert(n.as_str()) {
                return Err(format!("variable `{n}` declared twice"));
            }
        }
        Ok(Universe { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.names[var]
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    /// The canonical initial store `⊥`.
    pub fn bottom(&self) -> Store {
        Store::zeros(self.len())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !parse::is_keyword(s)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Integer division truncating toward zero.
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(BigInt),
    Var(VarId),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: impl Into<BigInt>) -> Self {
        Expr::Const(value.into())
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn eval(&self, s: &Store) -> Result<BigInt, EvalError> {
        Ok(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(v) => s.get(*v).clone(),
            Expr::Bin(op, l, r) => {
                let l = l.eval(s)?;
                let r = r.eval(s)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.is_zero() {
                            return Err(EvalError::DivisionByZero);
                        }
                        l / r
                    }
                }
            }
        })
    }

    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Bin(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    pub fn display<'a>(&'a self, universe: &'a Universe) -> impl fmt::Display + 'a {
        print::ExprDisplay { expr: self, universe }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    fn holds(self, l: &BigInt, r: &BigInt) -> bool {
        match self {
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Eq => l == r,
            CmpOp::Ne => l != r,
            CmpOp::Ge => l >= r,
            CmpOp::Gt => l > r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Lit(bool),
    Cmp(CmpOp, Expr, Expr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl std::ops::Not for BoolExpr {
    type Output = BoolExpr;

    fn not(self) -> BoolExpr {
        BoolExpr::Not(Box::new(self))
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        BoolExpr::Cmp(op, lhs, rhs)
    }

    pub fn and(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(l), Box::new(r))
    }

    /// Both operands of `and`/`or` are always evaluated, so a division by
    /// zero anywhere in the expression is reported.
    pub fn eval(&self, s: &Store) -> Result<bool, EvalError> {
        Ok(match self {
            BoolExpr::Lit(b) => *b,
            BoolExpr::Cmp(op, l, r) => op.holds(&l.eval(s)?, &r.eval(s)?),
            BoolExpr::Not(b) => !b.eval(s)?,
            BoolExpr::And(l, r) => {
                let l = l.eval(s)?;
                let r = r.eval(s)?;
                l && r
            }
            BoolExpr::Or(l, r) => {
                let l = l.eval(s)?;
                let r = r.eval(s)?;
                l || r
            }
        })
    }

    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            BoolExpr::Lit(_) => {}
            BoolExpr::Cmp(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            BoolExpr::Not(b) => b.vars(out),
            BoolExpr::And(l, r) | BoolExpr::Or(l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    pub fn display<'a>(&'a self, universe: &'a Universe) -> impl fmt::Display + 'a {
        print::BoolDisplay { expr: self, universe }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistSpecError {
    #[error("a distribution needs at least one value")]
    Empty,
    #[error("value {0} listed more than once")]
    DuplicateValue(BigInt),
    #[error("weight of value {0} must be positive")]
    NonPositiveWeight(BigInt),
    #[error("weights sum to {0}, not 1")]
    WeightSum(BigRational),
}

/// A finite distribution over integers with exact positive weights summing to 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistSpec {
    entries: Vec<(BigInt, BigRational)>,
}

impl DistSpec {
    pub fn new(entries: Vec<(BigInt, BigRational)>) -> Result<Self, DistSpecError> {
        if entries.is_empty() {
            return Err(DistSpecError::Empty);
        }
        let mut seen = BTreeSet::new();
        let mut sum = BigRational::zero();
        for (v, w) in &entries {
            if !seen.insert(v) {
                return Err(DistSpecError::DuplicateValue(v.clone()));
            }
            if !w.is_positive() {
                return Err(DistSpecError::NonPositiveWeight(v.clone()));
            }
            sum += w;
        }
        if !sum.is_one() {
            return Err(DistSpecError::WeightSum(sum));
        }
        Ok(DistSpec { entries })
    }

    /// Uniform over the given values.
    ///
    /// # Panics
    /// If `values` is empty or has duplicates.
    pub fn uniform(values: impl IntoIterator<Item = i64>) -> Self {
        let values: Vec<i64> = values.into_iter().collect();
        let w = BigRational::new(BigInt::one(), BigInt::from(values.len()));
        DistSpec::new(values.into_iter().map(|v| (v.into(), w.clone())).collect())
            .expect("valid uniform distribution")
    }

    /// Entries in declaration order, with weights as [`crate::store::Weight`]s.
    pub fn entries(&self) -> impl Iterator<Item = (&BigInt, crate::store::Weight)> + '_ {
        self.entries
            .iter()
            .map(|(v, w)| (v, crate::store::Weight::new(w.clone()).expect("positive")))
    }

    pub fn raw_entries(&self) -> &[(BigInt, BigRational)] {
        &self.entries
    }

    /// `ψ(z)`, zero off the support.
    pub fn prob(&self, z: &BigInt) -> BigRational {
        self.entries
            .iter()
            .find(|(v, _)| v == z)
            .map(|(_, w)| w.clone())
            .unwrap_or_else(BigRational::zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Assign(VarId, Expr),
    RAssign(VarId, DistSpec),
    Observe(BoolExpr),
    Seq(Box<Stmt>, Box<Stmt>),
    If(BoolExpr, Box<Stmt>, Box<Stmt>),
    While(BoolExpr, Box<Stmt>),
}

impl Stmt {
    pub fn seq(first: Stmt, second: Stmt) -> Self {
        Stmt::Seq(Box::new(first), Box::new(second))
    }

    /// Right-nested sequence of the given statements; `skip` when empty.
    pub fn sequence(stmts: impl IntoIterator<Item = Stmt>) -> Self {
        let mut stmts: Vec<Stmt> = stmts.into_iter().collect();
        let Some(mut acc) = stmts.pop() else {
            return Stmt::Skip;
        };
        while let Some(s) = stmts.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn if_else(cond: BoolExpr, then: Stmt, otherwise: Stmt) -> Self {
        Stmt::If(cond, Box::new(then), Box::new(otherwise))
    }

    pub fn while_loop(cond: BoolExpr, body: Stmt) -> Self {
        Stmt::While(cond, Box::new(body))
    }

    pub fn is_loop_free(&self) -> bool {
        match self {
            Stmt::Skip | Stmt::Assign(..) | Stmt::RAssign(..) | Stmt::Observe(_) => true,
            Stmt::Seq(a, b) | Stmt::If(_, a, b) => a.is_loop_free() && b.is_loop_free(),
            Stmt::While(..) => false,
        }
    }

    /// No observe and no random assignment anywhere.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Stmt::Skip | Stmt::Assign(..) => true,
            Stmt::RAssign(..) | Stmt::Observe(_) => false,
            Stmt::Seq(a, b) | Stmt::If(_, a, b) => a.is_deterministic() && b.is_deterministic(),
            Stmt::While(_, body) => body.is_deterministic(),
        }
    }

    pub fn display<'a>(&'a self, universe: &'a Universe) -> impl fmt::Display + 'a {
        print::StmtDisplay { stmt: self, universe, indent: 0 }
    }
}

/// `S return E` over a declared universe.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub universe: Universe,
    pub body: Stmt,
    pub ret: Expr,
}

impl Program {
    /// Variables that may be read before any assignment on some path from
    /// the initial store. Their value then comes from `⊥`.
    pub fn reads_before_write(&self) -> Vec<String> {
        let mut flagged = BTreeSet::new();
        let defined = defined_after(&self.body, &BTreeSet::new(), &mut flagged);
        let mut ret_vars = BTreeSet::new();
        self.ret.vars(&mut ret_vars);
        flagged.extend(ret_vars.difference(&defined).copied());
        flagged
            .into_iter()
            .map(|v| self.universe.name(v).to_owned())
            .collect()
    }
}

fn flag_reads(vars: BTreeSet<VarId>, defined: &BTreeSet<VarId>, flagged: &mut BTreeSet<VarId>) {
    flagged.extend(vars.difference(defined).copied());
}

fn defined_after(
    stmt: &Stmt,
    defined: &BTreeSet<VarId>,
    flagged: &mut BTreeSet<VarId>,
) -> BTreeSet<VarId> {
    match stmt {
        Stmt::Skip => defined.clone(),
        Stmt::Assign(x, e) => {
            let mut used = BTreeSet::new();
            e.vars(&mut used);
            flag_reads(used, defined, flagged);
            let mut out = defined.clone();
            out.insert(*x);
            out
        }
        Stmt::RAssign(x, _) => {
            let mut out = defined.clone();
            out.insert(*x);
            out
        }
        Stmt::Observe(b) => {
            let mut used = BTreeSet::new();
            b.vars(&mut used);
            flag_reads(used, defined, flagged);
            defined.clone()
        }
        Stmt::Seq(a, b) => {
            let mid = defined_after(a, defined, flagged);
            defined_after(b, &mid, flagged)
        }
        Stmt::If(c, a, b) => {
            let mut used = BTreeSet::new();
            c.vars(&mut used);
            flag_reads(used, defined, flagged);
            let da = defined_after(a, defined, flagged);
            let db = defined_after(b, defined, flagged);
            da.intersection(&db).copied().collect()
        }
        Stmt::While(c, body) => {
            let mut used = BTreeSet::new();
            c.vars(&mut used);
            flag_reads(used, defined, flagged);
            defined_after(body, defined, flagged);
            defined.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Universe {
        Universe::new(vec!["x".into(), "y".into()]).unwrap()
    }

    #[test]
    fn expression_evaluation() {
        let u = xy();
        let s = Store::from_values([2, 3]);
        assert_eq!(parse_expr("x + y", &u).unwrap().eval(&s), Ok(5.into()));
        let s = Store::from_values([3, 2]);
        assert_eq!(parse_expr("x", &u).unwrap().eval(&s), Ok(3.into()));
        assert_eq!(parse_expr("7", &u).unwrap().eval(&s), Ok(7.into()));
        assert_eq!(parse_expr("(x - 10) / 4", &u).unwrap().eval(&s), Ok((-1).into()));
        assert_eq!(
            parse_expr("x / (y - 2)", &u).unwrap().eval(&s),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn boolean_evaluation() {
        let u = xy();
        let b = parse_bool_expr("x + y >= 5", &u).unwrap();
        assert_eq!(b.eval(&Store::from_values([2, 3])), Ok(true));
        assert_eq!(b.eval(&Store::from_values([1, 3])), Ok(false));
        let y_lt_3 = parse_bool_expr("y < 3", &u).unwrap();
        assert_eq!(y_lt_3.eval(&Store::from_values([0, 3])), Ok(false));
        let guarded = parse_bool_expr("false and x / y > 0", &u).unwrap();
        assert_eq!(
            guarded.eval(&Store::from_values([1, 0])),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn dist_spec_validation() {
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(DistSpec::new(vec![]), Err(DistSpecError::Empty));
        assert!(matches!(
            DistSpec::new(vec![(0.into(), half.clone()), (1.into(), third)]),
            Err(DistSpecError::WeightSum(_))
        ));
        assert_eq!(
            DistSpec::new(vec![(0.into(), half.clone()), (0.into(), half.clone())]),
            Err(DistSpecError::DuplicateValue(0.into()))
        );
        let psi = DistSpec::uniform(0..4);
        assert_eq!(psi.prob(&2.into()), BigRational::new(1.into(), 4.into()));
        assert_eq!(psi.prob(&9.into()), BigRational::zero());
    }

    #[test]
    fn universe_rejects_duplicates_and_keywords() {
        assert!(Universe::new(vec!["x".into(), "x".into()]).is_err());
        assert!(Universe::new(vec!["while".into()]).is_err());
        assert!(Universe::new(vec![]).is_err());
    }

    #[test]
    fn lint_flags_reads_before_writes() {
        let p = parse_program("var x y; y := x + 1; return y").unwrap();
        assert_eq!(p.reads_before_write(), vec!["x".to_string()]);
        let p = parse_program("var x y; x ~ {0: 1}; if x > 0 { y := 1 } else { skip }; return y")
            .unwrap();
        assert_eq!(p.reads_before_write(), vec!["y".to_string()]);
        let p = parse_program("var x; x := 3; return x").unwrap();
        assert!(p.reads_before_write().is_empty());
    }

    #[test]
    fn sequence_is_right_nested() {
        let s = Stmt::sequence([Stmt::Skip, Stmt::Observe(BoolExpr::Lit(true)), Stmt::Skip]);
        assert_eq!(
            s,
            Stmt::seq(Stmt::Skip, Stmt::seq(Stmt::Observe(BoolExpr::Lit(true)), Stmt::Skip))
        );
        assert_eq!(Stmt::sequence([]), Stmt::Skip);
    }
}
