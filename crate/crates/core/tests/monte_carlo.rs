//! Sampling against the exact semantics, at three standard deviations.

use probcfg::denotational::normalized_semantics;
use probcfg::fixpoint::Engine;
use probcfg::gallery::{self, LoopBody};
use probcfg::rational::to_f64;
use probcfg::sampler::{sample_program, sample_program_parallel};
use probcfg::translate::translate_program;
use probcfg::{Dist, StopRule};

fn three_sigma_binomial(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn end_frequencies_follow_the_conditioned_output() {
    for p in [gallery::p1(), gallery::p2(LoopBody::Increment), gallery::p2(LoopBody::Resample)] {
        let engine = Engine::new(translate_program(&p)).unwrap();
        let (out, _) = engine.run_graph(&Dist::point(p.universe.bottom()), &StopRule::default()).unwrap();
        let mass = to_f64(out.mass().value());
        let rep = sample_program_parallel(&p, 40_000, 7, 100_000).unwrap();
        let accepted = rep.n_accepted as f64 / rep.n_total as f64;
        assert!((accepted - mass).abs() <= three_sigma_binomial(mass, rep.n_total));
        for (s, w) in out.iter() {
            let want = to_f64(w.value()) / mass;
            let got = rep.empirical_end_dist.get(s).map_or(0.0, to_f64) * rep.n_total as f64 / rep.n_accepted as f64;
            assert!((got - want).abs() <= three_sigma_binomial(want, rep.n_accepted), "{s:?}: {got} vs {want}");
        }
        for s in rep.empirical_end_dist.keys() {
            assert!(!out.weight(s).is_zero(), "sampled a store outside the support: {s:?}");
        }
    }
}

#[test]
fn diverging_half_hits_the_step_bound() {
    let p = gallery::p2(LoopBody::Constant);
    let rep = sample_program(&p, 20_000, 3, 200).unwrap();
    let hit = rep.n_step_bound_hit as f64 / rep.n_total as f64;
    assert!((hit - 0.5).abs() <= three_sigma_binomial(0.5, rep.n_total));
    assert_eq!(rep.n_rejected_observe, 0);
    let exact = to_f64(&normalized_semantics(&p, &StopRule::default()).unwrap().value);
    assert_eq!(exact, 0.5);
    // accepted runs return x in {0, 1} uniformly
    let mean = to_f64(rep.empirical_normalized_expectation.as_ref().unwrap());
    assert!((mean - exact).abs() <= 3.0 * (0.25 / rep.n_accepted as f64).sqrt());
}

/// Variance of the return value on accepted runs: 2 w.p. 1/3, 3 w.p. 2/3.
const P1_VARIANCE: f64 = 2.0 / 9.0;

#[test]
fn seed_42_meets_the_fixed_tolerances() {
    let p = gallery::p1();
    let rep = sample_program(&p, 100_000, 42, 100_000).unwrap();
    let mean = to_f64(rep.empirical_normalized_expectation.as_ref().unwrap());
    let rate = to_f64(&rep.acceptance_rate());
    assert!((mean - 8.0 / 3.0).abs() <= 0.05, "{mean}");
    assert!((rate - 3.0 / 16.0).abs() <= 0.01, "{rate}");
    // the fixed tolerances are wider than three standard deviations
    assert!(3.0 * (P1_VARIANCE / (100_000.0 * 3.0 / 16.0)).sqrt() < 0.05);
    assert!(three_sigma_binomial(3.0 / 16.0, 100_000) < 0.01);
}

#[test]
fn conditioned_mean_is_unbiased_across_seeds() {
    let p = gallery::p1();
    let seeds = 20u64;
    let mut z_sum = 0.0;
    for seed in 0..seeds {
        let rep = sample_program(&p, 20_000, seed, 1_000).unwrap();
        let mean = to_f64(rep.empirical_normalized_expectation.as_ref().unwrap());
        z_sum += (mean - 8.0 / 3.0) / (P1_VARIANCE / rep.n_accepted as f64).sqrt();
    }
    let z_mean = z_sum / seeds as f64;
    assert!(z_mean.abs() <= 3.0 / (seeds as f64).sqrt(), "{z_mean}");
}
