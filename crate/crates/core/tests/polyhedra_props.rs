mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn contains_point_matches_evaluation(
        p in polyhedron(two_clocks_one_param()),
        pts in points(two_clocks_one_param(), 1000),
    ) {
        check_sampling(&p, &pts)?;
    }

    #[test]
    fn projection_matches_grid_search(p in polyhedron(one_clock_two_params())) {
        check_projection(&p)?;
    }

    #[test]
    fn time_elapse_is_closed_under_delay(p in polyhedron(two_clocks_one_param())) {
        check_time_elapse(&p)?;
    }

    #[test]
    fn negation_partitions_the_space(p in polyhedron(two_clocks_one_param())) {
        check_negate(&p)?;
    }

    #[test]
    fn variable_bounds_are_tight(p in polyhedron(two_clocks_one_param())) {
        check_bounds(&p)?;
    }
}
