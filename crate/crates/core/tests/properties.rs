mod common;

use proptest::prelude::*;

use common::laws;
use common::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn select_partitions(d in dist(3), b in bool_expr(3)) {
        laws::select_partitions(&d, &b)?;
    }

    #[test]
    fn assignments_preserve_mass(d in dist(3), d2 in dist(3), x in 0usize..3, e in expr(3), psi in dist_spec()) {
        laws::assignments_preserve_mass(&d, &d2, x, &e, &psi)?;
    }

    #[test]
    fn omega_k_is_linear_and_non_increasing(g in pcfg(2, false), d1 in dist(2), d2 in dist(2), c in weight()) {
        laws::omega_k_linear(&g, &d1, &d2, &c)?;
    }

    #[test]
    fn deterministic_graphs_keep_concentration(g in pcfg(2, true), s in store(2)) {
        laws::deterministic_concentrated(&g, &s)?;
    }

    #[test]
    fn lap_adds_along_postdominators(g in pcfg(2, false)) {
        laws::lap_additive(&g)?;
    }

    #[test]
    fn lap_adds_on_translated_programs(s in any_stmt(2)) {
        laws::lap_additive(&probcfg::translate::translate_stmt(&s, &universe(2)))?;
    }

    #[test]
    fn fppd_is_the_prec_minimum(g in pcfg(2, false)) {
        laws::fppd_is_prec_minimum(&g)?;
    }

    #[test]
    fn every_cycle_has_a_cycle_inducing_node(g in pcfg(2, false)) {
        laws::cycles_have_inducing_nodes(&g)?;
    }

    #[test]
    fn composition_at_matched_level(stmt in any_stmt(2), d in dist(2), k in 1usize..=3) {
        laws::composition(&stmt, &d, k)?;
    }

    #[test]
    fn adequacy_exact_on_loop_free(stmt in loop_free_stmt(2), f in expectation(2), d in dist(2)) {
        laws::adequacy_loop_free(&stmt, &f, &d)?;
    }

    #[test]
    fn adequacy_exact_on_counter_loops(stmt in terminating_stmt(3), f in expectation(3), d in dist(3)) {
        laws::adequacy_counter_loops(&stmt, &f, &d)?;
    }

    #[test]
    fn adequacy_within_slack_when_certified(stmt in any_stmt(2), f in expectation(2), d in dist(2)) {
        laws::adequacy_unrestricted(&stmt, &f, &d)?;
    }
}
