//! Two four-sided dice conditioned on `x + y >= 5`, through the graph semantics.

use probcfg::fixpoint::Engine;
use probcfg::gallery;
use probcfg::{Dist, StopRule, Store};

fn main() {
    let engine = Engine::new(gallery::g1()).unwrap();
    let (out, report) = engine
        .run_graph(&Dist::point(Store::zeros(2)), &StopRule::default())
        .unwrap();
    for (s, w) in out.iter() {
        println!("{}  {w}", s.display(engine.graph().universe()));
    }
    println!("mass {} ({report})", out.mass());
}
