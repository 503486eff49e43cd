//! Randomized invariants, 1000 instances per suite.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn products_are_subadditive(case in cocycle_case(), seed in any::<u64>(), m in 1usize..50, n in 1usize..50) {
        subadditivity(&case, seed, m, n)?;
    }

    #[test]
    fn products_satisfy_the_cocycle_identity(case in cocycle_case(), seed in any::<u64>(), m in 1usize..50, n in 1usize..50) {
        cocycle_identity(&case, seed, m, n)?;
    }

    #[test]
    fn weak_star_distance_is_a_metric(system in 0u8..4, seeds in any::<[u64; 3]>(), n in 1usize..400) {
        metric_axioms(system, seeds, n)?;
    }

    #[test]
    fn results_ignore_thread_count(case in cocycle_case(), seed in any::<u64>()) {
        determinism(&case, seed)?;
    }
}
