mod common;

use iid_dispatch::instance::generate_lower_bound_instance;
use iid_dispatch::transport::{solve_tpp, solve_tpp_with, tpp_upper_bound, TppOptions};
use iid_dispatch::{Error, ExpectationGraph, FlowSolution};
use num_rational::Ratio;
use proptest::prelude::*;

#[test]
fn worked_example_objective_is_eight() {
    let g = iid_dispatch::example::instance();
    let f = solve_tpp(&g).unwrap();
    assert_eq!(f.objective(), 8.0);
    common::assert_flow_feasible(&g, &f);
    f.certify(&g).unwrap();
    // The published flow is another optimum.
    assert_eq!(iid_dispatch::example::flow().objective(), 8.0);
    iid_dispatch::example::flow().certify(&g).unwrap();
}

#[test]
fn lower_bound_objectives() {
    let g = generate_lower_bound_instance(3, Ratio::new(3, 4)).unwrap();
    assert_eq!(solve_tpp(&g).unwrap().objective(), 2.25);
    assert_eq!(common::vertex_enumeration_tpp(&g), 2.25);
    let g = generate_lower_bound_instance(2, Ratio::new(1, 2)).unwrap();
    let f = solve_tpp(&g).unwrap();
    assert_eq!(f.objective(), 1.0);
    assert_eq!(common::vertex_enumeration_tpp(&g), 1.0);
    assert_eq!(f.flow(0, 0), Ratio::new(1, 2));
}

#[test]
fn infeasible_flows_are_reported() {
    let g = iid_dispatch::example::instance();
    let mut rows = iid_dispatch::example::flow().scaled_rows();
    rows[0][0] -= 1;
    rows[0][1] += 1;
    let bad = FlowSolution::from_scaled(&g, rows, 10).unwrap();
    let v = bad.violations(&g);
    assert_eq!(v.len(), 2, "{v:?}");
    assert!(bad.certify(&g).is_err());
}

#[test]
fn capacity_guard() {
    let g = ExpectationGraph::new(vec![vec![1.0, 2.0]; 3], vec![1, 999], 1000).unwrap();
    assert!(matches!(
        solve_tpp_with(
            &g,
            TppOptions {
                max_total_supply: 2999
            }
        ),
        Err(Error::Capacity(_))
    ));
}

#[test]
fn upper_bound_matches_objective() {
    let g = iid_dispatch::example::instance();
    assert_eq!(tpp_upper_bound(&g).unwrap(), 8.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_vertex_enumeration(seed in any::<u64>()) {
        let g = common::random_instance(seed, 4, 3, 6);
        let f = solve_tpp(&g).unwrap();
        let oracle = common::vertex_enumeration_tpp(&g);
        prop_assert!((f.objective() - oracle).abs() <= 1e-9, "{} vs {}", f.objective(), oracle);
        common::assert_flow_feasible(&g, &f);
        prop_assert!(f.certify(&g).is_ok());
    }

    #[test]
    fn adding_a_constant_shifts_by_n(seed in any::<u64>(), c in 0.0f64..3.0) {
        let g = common::random_instance(seed, 5, 4, 9);
        let shifted = ExpectationGraph::new(
            g.utility_rows().into_iter().map(|r| r.into_iter().map(|u| u + c).collect()).collect(),
            g.numerators().to_vec(),
            g.denominator(),
        ).unwrap();
        let a = solve_tpp(&g).unwrap().objective();
        let b = solve_tpp(&shifted).unwrap().objective();
        prop_assert!((b - a - g.n() as f64 * c).abs() <= 1e-9 * (1.0 + b.abs()));
    }

    #[test]
    fn flows_survive_json(seed in any::<u64>()) {
        let g = common::random_instance(seed, 5, 4, 9);
        let f = solve_tpp(&g).unwrap();
        let back = FlowSolution::from_json(&f.to_json(), &g).unwrap();
        prop_assert_eq!(back.scaled_rows(), f.scaled_rows());
    }
}
