//! Random programs, graphs and distributions for the property suites.
//!
//! Expressions never divide by a variable, so evaluation cannot fail.
//! Three statement tiers: loop-free, counter loops that always terminate,
//! and unrestricted loops.

#![allow(dead_code)]

pub mod laws;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use probcfg::analysis::DEFAULT_NODE_GUARD;
use probcfg::denotational::Expectation;
use probcfg::pcfg::{NodeLabel, Pcfg, Successors};
use probcfg::store::Weight;
use probcfg::translate::translate_stmt;
use probcfg::syntax::{BinOp, BoolExpr, CmpOp, DistSpec, Expr, Stmt, Universe, VarId};
use probcfg::{Dist, Store};

pub fn universe(n: usize) -> Universe {
    Universe::new(["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()).unwrap()
}

pub fn expr(vars: usize) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (-3i64..=3).prop_map(Expr::constant),
        (0..vars).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul]))
                .prop_map(|(l, r, op)| Expr::bin(op, l, r)),
            (inner, prop::sample::select(vec![1i64, 2, 3, -2])).prop_map(|(l, c)| Expr::bin(BinOp::Div, l, Expr::constant(c))),
        ]
    })
    .boxed()
}

pub fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt])
}

pub fn bool_expr(vars: usize) -> BoxedStrategy<BoolExpr> {
    let atom = prop_oneof![
        1 => any::<bool>().prop_map(BoolExpr::Lit),
        6 => (cmp_op(), expr(vars), expr(vars)).prop_map(|(op, l, r)| BoolExpr::cmp(op, l, r)),
    ];
    atom.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|b| !b),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| BoolExpr::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| BoolExpr::or(l, r)),
        ]
    })
    .boxed()
}

/// A distribution with support inside `{0..3}` and positive weights summing to 1.
pub fn dist_spec() -> impl Strategy<Value = DistSpec> {
    prop::collection::btree_map(0i64..=3, 1i64..=4, 1..=4).prop_map(|m| {
        let total: i64 = m.values().sum();
        DistSpec::new(
            m.into_iter()
                .map(|(v, w)| (BigInt::from(v), BigRational::new(w.into(), total.into())))
                .collect(),
        )
        .unwrap()
    })
}

fn atomic(vars: usize, assignable: usize) -> BoxedStrategy<Stmt> {
    prop_oneof![
        1 => Just(Stmt::Skip),
        3 => ((0..assignable), expr(vars)).prop_map(|(x, e)| Stmt::Assign(x, e)),
        3 => ((0..assignable), dist_spec()).prop_map(|(x, psi)| Stmt::RAssign(x, psi)),
        2 => bool_expr(vars).prop_map(Stmt::Observe),
    ]
    .boxed()
}

fn compound(leaf: BoxedStrategy<Stmt>, vars: usize, depth: u32) -> BoxedStrategy<Stmt> {
    leaf.prop_recursive(depth, 12, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Stmt::seq(a, b)),
            (bool_expr(vars), inner.clone(), inner).prop_map(|(c, a, b)| Stmt::if_else(c, a, b)),
        ]
    })
    .boxed()
}

/// Loop-free statements of depth at most 5.
pub fn loop_free_stmt(vars: usize) -> BoxedStrategy<Stmt> {
    compound(atomic(vars, vars), vars, 5)
}

/// `c := 0; while c < bound and guard { body; c := c + 1 }` with `c` the last
/// variable, never assigned by the body.
pub fn counter_loop(vars: usize) -> BoxedStrategy<Stmt> {
    let c = vars - 1;
    let body = compound(atomic(vars, c), vars, 2);
    (1i64..=3, bool_expr(vars), body)
        .prop_map(move |(bound, guard, body)| {
            let cond = BoolExpr::and(BoolExpr::cmp(CmpOp::Lt, Expr::Var(c), Expr::constant(bound)), guard);
            let step = Stmt::Assign(c, Expr::bin(BinOp::Add, Expr::Var(c), Expr::constant(1)));
            Stmt::seq(Stmt::Assign(c, Expr::constant(0)), Stmt::while_loop(cond, Stmt::seq(body, step)))
        })
        .boxed()
}

/// Statements mixing loop-free parts with terminating counter loops; `vars >= 2`.
pub fn terminating_stmt(vars: usize) -> BoxedStrategy<Stmt> {
    let leaf = prop_oneof![3 => atomic(vars, vars - 1), 2 => counter_loop(vars)].boxed();
    let u = universe(vars);
    compound(leaf, vars, 3)
        .prop_filter("within the analysis guard", move |s| translate_stmt(s, &u).len() <= DEFAULT_NODE_GUARD)
        .boxed()
}

/// Arbitrary guards: loops may diverge or converge only in the limit.
pub fn any_stmt(vars: usize) -> BoxedStrategy<Stmt> {
    atomic(vars, vars)
        .prop_recursive(3, 10, 2, move |inner| {
            prop_oneof![
                2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Stmt::seq(a, b)),
                2 => (bool_expr(vars), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Stmt::if_else(c, a, b)),
                1 => (bool_expr(vars), inner).prop_map(|(c, b)| Stmt::while_loop(c, b)),
            ]
        })
        .boxed()
}

pub fn store(vars: usize) -> impl Strategy<Value = Store> {
    prop::collection::vec(-3i64..=3, vars).prop_map(Store::from_values)
}

/// Up to 8 stores with total mass at most 1.
pub fn dist(vars: usize) -> impl Strategy<Value = Dist> {
    (prop::collection::btree_map(store(vars), 1i64..=5, 1..=8), 0i64..=3).prop_map(|(m, slack)| {
        let total: i64 = m.values().sum::<i64>() + slack;
        Dist::from_entries(m.into_iter().map(|(s, w)| (s, Weight::ratio(w, total))))
    })
}

pub fn weight() -> impl Strategy<Value = Weight> {
    (0i64..=6, 1i64..=6).prop_map(|(n, d)| Weight::ratio(n.min(d), d))
}

/// A non-negative post-expectation.
pub fn expectation(vars: usize) -> BoxedStrategy<Expectation> {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    prop_oneof![
        (0i64..=4).prop_map(move |c| Expectation::Const(r(c, 2))),
        (0..vars).prop_map(|x| Expectation::Expr(Expr::bin(BinOp::Mul, Expr::Var(x), Expr::Var(x)))),
        (bool_expr(vars), 1i64..=5, 0i64..=3).prop_map(move |(b, c, k)| {
            Expectation::Indicator(b).scaled(r(c, 1)).plus(Expectation::Const(r(k, 3)))
        }),
    ]
    .boxed()
}

fn single_label(vars: usize, deterministic: bool) -> BoxedStrategy<NodeLabel> {
    if deterministic {
        prop_oneof![
            1 => Just(NodeLabel::Skip),
            3 => ((0..vars), expr(vars)).prop_map(|(x, e)| NodeLabel::Assign(x as VarId, e)),
        ]
        .boxed()
    } else {
        prop_oneof![
            1 => Just(NodeLabel::Skip),
            3 => ((0..vars), expr(vars)).prop_map(|(x, e)| NodeLabel::Assign(x, e)),
            3 => ((0..vars), dist_spec()).prop_map(|(x, psi)| NodeLabel::RAssign(x, psi)),
            2 => bool_expr(vars).prop_map(NodeLabel::Observe),
        ]
        .boxed()
    }
}

#[derive(Clone, Debug)]
enum Shape {
    Single(NodeLabel, Option<usize>),
    Branch(BoolExpr, usize, bool),
}

/// Valid graphs with nodes `1..=n`, Start 1 and End `n`, not necessarily
/// structured. Every node has an edge to its successor in id order, which
/// keeps every node reachable both ways; branches add an arbitrary second
/// edge, which is where cycles come from.
pub fn pcfg(vars: usize, deterministic: bool) -> BoxedStrategy<Pcfg> {
    let shape = prop_oneof![
        3 => (single_label(vars, deterministic), prop::option::weighted(0.2, 0usize..64)).prop_map(|(l, j)| Shape::Single(l, j)),
        2 => (bool_expr(vars), 0usize..64, any::<bool>()).prop_map(|(b, t, swap)| Shape::Branch(b, t, swap)),
    ];
    (prop::collection::vec(shape, 1..=8), expr(vars))
        .prop_map(move |(shapes, ret)| {
            let n = shapes.len() + 1;
            let mut g = Pcfg::new(universe(vars), 1, n);
            for (i, shape) in shapes.into_iter().enumerate() {
                let v = i + 1;
                match shape {
                    Shape::Single(label, jump) => {
                        // a forward jump keeps End reachable
                        let w = jump.map_or(v + 1, |j| v + 1 + j % (n - v));
                        g.insert(v, label, Successors::One(w));
                    }
                    Shape::Branch(b, t, swap) => {
                        let mut other = 1 + t % n;
                        if other == v + 1 {
                            other = if v + 2 <= n { v + 2 } else { 1 };
                        }
                        let (on_true, on_false) = if swap { (other, v + 1) } else { (v + 1, other) };
                        g.insert(v, NodeLabel::Branch(b), Successors::Branch { on_true, on_false });
                    }
                }
            }
            g.insert(n, NodeLabel::Return(ret), Successors::None);
            g
        })
        .prop_filter("valid graph", |g| g.validate().is_empty())
        .boxed()
}
