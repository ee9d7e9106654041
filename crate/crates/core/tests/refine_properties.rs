//! Every strategy yields a valid partition of random star-shaped polygons,
//! judged by independent area and point-sampling oracles.

mod common;

use common::{area_defect, grid_partition_check, random_polygon};
use polyrefine::refine::{refine_with_label, validate_partition, RefineOptions, Strategy, StrategyUsed};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(seed: u64, r_min: f64, strategy: Strategy, label: usize) -> Result<(), TestCaseError> {
    let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), r_min);
    let r = refine_with_label(&p, strategy, label, &RefineOptions::default())
        .map_err(|e| TestCaseError::fail(format!("{e} on {:?}", p.vertices())))?;
    prop_assert!(r.children.len() >= 2);
    prop_assert!(area_defect(&p, &r.children) < 1e-10, "area defect {}", area_defect(&p, &r.children));
    grid_partition_check(&p, &r.children, 40).map_err(TestCaseError::fail)?;
    prop_assert!(validate_partition(&p, &r.children));
    if strategy == Strategy::Mp && p.is_convex() {
        prop_assert_eq!(r.strategy_used, StrategyUsed::Mp);
        prop_assert_eq!(r.children.len(), p.len());
    }
    for q in &r.new_boundary_points {
        prop_assert!(p.boundary_distance(*q) <= 1e-9 * p.diameter());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mp_partitions(seed in any::<u64>(), r_min in 0.3..1.0f64) {
        check(seed, r_min, Strategy::Mp, 3)?;
    }

    #[test]
    fn cnn_mp_partitions(seed in any::<u64>(), r_min in 0.3..1.0f64, label in 3usize..=6) {
        check(seed, r_min, Strategy::CnnMp, label)?;
    }

    #[test]
    fn cnn_rp_partitions(seed in any::<u64>(), r_min in 0.3..1.0f64, label in 3usize..=6) {
        check(seed, r_min, Strategy::CnnRp, label)?;
    }
}
