use probcfg::analysis::{simple_cycles, Analysis};
use probcfg::gallery::{self, LoopBody};

fn main() {
    let g = gallery::g2(LoopBody::Increment);
    let a = Analysis::new(&g).unwrap();
    for v in g.node_ids() {
        let fppd = a.fppd(v).map_or("-".to_string(), |w| w.to_string());
        let mark = if a.is_cycle_inducing(v) { "  (cycle-inducing)" } else { "" };
        println!("{v}: {:<40} fppd {fppd}{mark}", g.label(v).text(g.universe()));
    }
    for ((v, w), n) in a.lap_table(&g).unwrap() {
        if v != w {
            println!("LAP({v}, {w}) = {n}");
        }
    }
    for cycle in simple_cycles(&g, a.node_guard()).unwrap() {
        println!("cycle {cycle:?}");
    }
}
