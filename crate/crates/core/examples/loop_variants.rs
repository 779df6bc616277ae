//! The three loop bodies of the counting example, one iterate at a time.

use probcfg::fixpoint::Engine;
use probcfg::gallery::{self, point_xy, LoopBody};
use probcfg::rational::inverse_power_of_ten;
use probcfg::store::Weight;
use probcfg::StopRule;

fn main() {
    let rule = StopRule::new(inverse_power_of_ten(6), 200);
    for body in LoopBody::ALL {
        let engine = Engine::new(gallery::g2(body)).unwrap();
        let d = point_xy(2, 0, Weight::ratio(1, 4));
        println!("body `{}`", body.source());
        for k in 1..=6 {
            let dk = engine.omega_k(k, 4, 6, &d).unwrap();
            println!("  k={k}  mass {}", dk.mass());
        }
        let (limit, report) = engine.omega(4, 6, &d, &rule).unwrap();
        println!("  limit mass {}  [{report}]", limit.mass());
        let (end, _) = engine.run_graph(&gallery::point_xy(0, 0, Weight::one()), &rule).unwrap();
        println!("  from the start: mass {}", end.mass());
    }
}
