use std::time::Instant;

use probcfg::denotational::normalized_semantics;
use probcfg::gallery;
use probcfg::rational::to_f64;
use probcfg::sampler::{sample_program_parallel, DEFAULT_STEP_BOUND};
use probcfg::StopRule;

fn main() {
    let p = gallery::p1();
    let exact = normalized_semantics(&p, &StopRule::default()).unwrap();
    let t = Instant::now();
    let rep = sample_program_parallel(&p, 100_000, 42, DEFAULT_STEP_BOUND).unwrap();
    println!("{} runs in {:?}", rep.n_total, t.elapsed());
    println!("acceptance {:.5} (exact {})", to_f64(&rep.acceptance_rate()), exact.denominator);
    let mean = rep.empirical_normalized_expectation.unwrap();
    println!("mean       {:.5} (exact {})", to_f64(&mean), exact.value);
    for (s, f) in &rep.empirical_end_dist {
        println!("  {}  {:.5}", s.display(&p.universe), to_f64(f));
    }
}
