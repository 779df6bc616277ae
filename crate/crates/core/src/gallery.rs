//! Small reference programs and graphs used by the examples, the tests and
//! the shipped corpus.
//!
//! `g1` conditions two uniform draws on their sum; `g2` draws `x`, and when
//! `x >= 2` loops on `y < 3` with one of three bodies ([`LoopBody`]).

use crate::pcfg::{NodeLabel, Pcfg, Successors};
use crate::store::{Dist, Store, Weight};
use crate::syntax::{parse_program, BinOp, BoolExpr, CmpOp, DistSpec, Expr, Program, Universe};

pub const X: usize = 0;
pub const Y: usize = 1;

pub fn xy() -> Universe {
    Universe::new(vec!["x".into(), "y".into()]).expect("valid universe")
}

/// Uniform over `{0, 1, 2, 3}`.
pub fn psi4() -> DistSpec {
    DistSpec::uniform(0..4)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoopBody {
    /// `y := 1`: the loop never exits once entered.
    Constant,
    /// `y := y + 1`: exits after `3 - y` rounds.
    Increment,
    /// `y ~ psi4`: exits with probability 1/4 per round.
    Resample,
}

impl LoopBody {
    pub const ALL: [LoopBody; 3] = [LoopBody::Constant, LoopBody::Increment, LoopBody::Resample];

    pub fn label(self) -> NodeLabel {
        match self {
            LoopBody::Constant => NodeLabel::Assign(Y, Expr::constant(1)),
            LoopBody::Increment => {
                NodeLabel::Assign(Y, Expr::bin(BinOp::Add, Expr::Var(Y), Expr::constant(1)))
            }
            LoopBody::Resample => NodeLabel::RAssign(Y, psi4()),
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            LoopBody::Constant => "y := 1",
            LoopBody::Increment => "y := y + 1",
            LoopBody::Resample => "y ~ {0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4}",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LoopBody::Constant => "constant",
            LoopBody::Increment => "increment",
            LoopBody::Resample => "resample",
        }
    }
}

/// Nodes 1..4: `x ~ psi4`, `y ~ psi4`, `observe(x + y >= 5)`, `return x`.
pub fn g1() -> Pcfg {
    let mut g = Pcfg::new(xy(), 1, 4);
    let sum_ge_5 = BoolExpr::cmp(
        CmpOp::Ge,
        Expr::bin(BinOp::Add, Expr::Var(X), Expr::Var(Y)),
        Expr::constant(5),
    );
    g.insert(1, NodeLabel::RAssign(X, psi4()), Successors::One(2));
    g.insert(2, NodeLabel::RAssign(Y, psi4()), Successors::One(3));
    g.insert(3, NodeLabel::Observe(sum_ge_5), Successors::One(4));
    g.insert(4, NodeLabel::Return(Expr::Var(X)), Successors::None);
    g
}

/// Nodes 1..6: `x ~ psi4`, `y := 0`, branch `x >= 2`, branch `y < 3`, the
/// loop body, `return x`.
pub fn g2(body: LoopBody) -> Pcfg {
    let mut g = Pcfg::new(xy(), 1, 6);
    g.insert(1, NodeLabel::RAssign(X, psi4()), Successors::One(2));
    g.insert(2, NodeLabel::Assign(Y, Expr::constant(0)), Successors::One(3));
    g.insert(
        3,
        NodeLabel::Branch(BoolExpr::cmp(CmpOp::Ge, Expr::Var(X), Expr::constant(2))),
        Successors::Branch { on_true: 4, on_false: 6 },
    );
    g.insert(
        4,
        NodeLabel::Branch(BoolExpr::cmp(CmpOp::Lt, Expr::Var(Y), Expr::constant(3))),
        Successors::Branch { on_true: 5, on_false: 6 },
    );
    g.insert(5, body.label(), Successors::One(4));
    g.insert(6, NodeLabel::Return(Expr::Var(X)), Successors::None);
    g
}

pub const P1_SOURCE: &str = "var x y;
x ~ {0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4};
y ~ {0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4};
observe(x + y >= 5);
return x
";

pub fn p1() -> Program {
    parse_program(P1_SOURCE).expect("valid program")
}

pub fn p2_source(body: LoopBody) -> String {
    format!(
        "var x y;
x ~ {{0: 1/4, 1: 1/4, 2: 1/4, 3: 1/4}};
y := 0;
if x >= 2 {{
    while y < 3 {{
        {}
    }}
}} else {{
    skip
}};
return x
",
        body.source()
    )
}

pub fn p2(body: LoopBody) -> Program {
    parse_program(&p2_source(body)).expect("valid program")
}

/// `D^r_{i,j}`: weight `r` on the single store `{x ↦ i, y ↦ j}`.
pub fn point_xy(i: i64, j: i64, r: Weight) -> Dist {
    Dist::point_weighted(Store::from_values([i, j]), r)
}
