//! Exact semantics for probabilistic control-flow graphs and structured
//! probabilistic programs.
//!
//! The crate provides two independent semantics over the same store
//! distributions and a translation between them:
//!
//! - [`fixpoint`] evaluates a [`pcfg::Pcfg`] by the level-indexed fixed-point
//!   construction driven by first proper postdominators ([`analysis`]).
//! - [`denotational`] evaluates a [`syntax::Program`] by an expectation
//!   transformer with Kleene iteration for loops.
//! - [`translate`] compiles programs to graphs, and [`adequacy`] compares
//!   both sides, with a rejection [`sampler`] as a third, statistical opinion.
//!
//! All weights are exact rationals.

pub mod adequacy;
pub mod analysis;
pub mod cli;
pub mod convergence;
pub mod denotational;
pub mod fixpoint;
pub mod gallery;
pub mod pcfg;
pub mod rational;
pub mod sampler;
pub mod store;
pub mod syntax;
pub mod translate;

pub use convergence::{ConvergenceReport, Criterion, StopRule};
pub use store::{Dist, Store, Weight};
pub use syntax::{parse_program, Program, Universe};
