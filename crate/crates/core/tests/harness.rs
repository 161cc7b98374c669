mod common;

use iid_dispatch::dispatch::Policy;
use iid_dispatch::harness::{
    check_lemmas, check_lemmas_with_flow, estimate_ratio, exact_summary, simulate, theorem2_sweep,
};
use iid_dispatch::oracle::{exact_dispatch_expectation, exact_opt_expectation};
use iid_dispatch::transport::solve_tpp;
use iid_dispatch::FlowSolution;
use num_rational::Ratio;

/// The worked example's flow with half of w1's type-1 mass moved to w4:
/// columns still balance but rows 1 and 4 do not sum to 1.
fn unbalanced_flow() -> FlowSolution {
    let g = iid_dispatch::example::instance();
    let mut rows = iid_dispatch::example::flow().scaled_rows();
    rows[0][0] = 5;
    rows[3][0] = 10;
    FlowSolution::from_scaled(&g, rows, 10).unwrap()
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let g = iid_dispatch::example::instance();
    let a = estimate_ratio(&g, Policy::Dispatch, 5000, 8, 1).unwrap();
    let b = estimate_ratio(&g, Policy::Dispatch, 5000, 8, 4).unwrap();
    assert_eq!(a, b);
    let a = check_lemmas(&g, 3000, 8, 1).unwrap();
    let b = check_lemmas(&g, 3000, 8, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unbalanced_flow_fails_lemma_two() {
    let g = iid_dispatch::example::instance();
    let report = check_lemmas_with_flow(&g, &unbalanced_flow(), 20_000, 0, 1, 20).unwrap();
    assert!(!report.all_pass());
    let empirical = report
        .rows
        .iter()
        .find(|r| r.check == "lemma2_preferred_uniform")
        .unwrap();
    assert!(!empirical.pass, "{empirical:?}");
    let exact = report
        .rows
        .iter()
        .find(|r| r.check == "lemma2_flow_row_sums")
        .unwrap();
    assert!(!exact.pass);
}

#[test]
fn optimal_flow_passes_everything() {
    let g = iid_dispatch::example::instance();
    let report = check_lemmas(&g, 50_000, 1, 1).unwrap();
    assert!(report.all_pass(), "{report:#?}");
    assert_eq!(report.rows.len(), 8);
}

#[test]
fn monte_carlo_agrees_with_exact_values() {
    for seed in 0..3 {
        let g = common::random_instance(100 + seed, 6, 4, 10);
        let flow = solve_tpp(&g).unwrap();
        let exact_alg = exact_dispatch_expectation(&g, &flow).unwrap().value;
        let exact_opt = exact_opt_expectation(&g).unwrap().value;
        let est = estimate_ratio(&g, Policy::Dispatch, 40_000, seed, 1).unwrap();
        assert!(
            (est.alg_mean - exact_alg).abs() <= 3.0 * est.alg_se + 1e-12,
            "{est:?} vs {exact_alg}"
        );
        assert!(
            (est.opt_mean - exact_opt).abs() <= 3.0 * est.opt_se + 1e-12,
            "{est:?} vs {exact_opt}"
        );
        assert!(est.ratio_ci.0 <= est.ratio && est.ratio <= est.ratio_ci.1);
    }
}

#[test]
fn exact_summary_chain() {
    let s = exact_summary(&iid_dispatch::example::instance()).unwrap();
    assert!(s.all_pass());
    assert_eq!(s.tpp, 8.0);
    assert!(s.dispatch >= 4.0 && s.opt <= 8.0);
}

#[test]
fn small_sweep_respects_the_online_bound() {
    let rows = theorem2_sweep(
        &[10, 20],
        &[Ratio::new(1, 2), Ratio::new(1, 10)],
        4000,
        2,
        1,
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.upper_bound_holds, "{r:?}");
        assert!(r.ratio_bound > 0.5 && r.ratio_bound < 1.0);
        assert!(r.limit_ratio < r.ratio_bound + 1e-12);
    }
    assert!(theorem2_sweep(&[], &[Ratio::new(1, 2)], 10, 0, 1).is_err());
}

#[test]
fn trials_must_be_positive() {
    let g = iid_dispatch::example::instance();
    assert!(simulate(&g, Policy::Greedy, 0, 0, 1).is_err());
    assert!(check_lemmas(&g, 0, 0, 1).is_err());
}
