//! Translate a program into its control-flow graph and emit Graphviz.
//!
//! `cargo run --example translate_to_dot | dot -Tsvg > p2.svg`

use probcfg::gallery::{self, LoopBody};
use probcfg::translate::translate_program;

fn main() {
    let p = gallery::p2(LoopBody::Increment);
    let raw = translate_program(&p);
    let small = raw.compress_skips();
    eprintln!("raw: {} nodes, simplified: {} nodes", raw.len(), small.len());
    eprintln!("simplified graph matches the hand-built one: {}", small.is_isomorphic_by_canonical_form(&gallery::g2(LoopBody::Increment)));
    print!("{}", small.to_dot());
}
