//! Rasterization ignores position, scale and aligned vertices.

mod common;

use common::random_polygon;
use polyrefine::raster::{rasterize, RESOLUTION};
use polyrefine::{Point2, Polygon};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transformed(p: &Polygon, scale: f64, shift: Point2) -> Polygon {
    Polygon::new(p.vertices().iter().map(|&v| v * scale + shift).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translation_and_scale_invariance(
        seed in any::<u64>(),
        scale in 1e-3..1e3f64,
        dx in -1e3..1e3f64,
        dy in -1e3..1e3f64,
    ) {
        let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), 0.3);
        let a = rasterize(&p).unwrap();
        let b = rasterize(&transformed(&p, scale, Point2::new(dx, dy))).unwrap();
        prop_assert_eq!(a.lit_count(), b.lit_count());
        prop_assert!(a == b);
    }

    #[test]
    fn images_are_binary_and_nonempty(seed in any::<u64>()) {
        let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), 0.3);
        let img = rasterize(&p).unwrap();
        prop_assert_eq!(img.pixels().len(), RESOLUTION * RESOLUTION);
        prop_assert!(img.pixels().iter().all(|&v| v <= 1));
        prop_assert!(img.lit_count() > 0);
    }

    #[test]
    fn aligned_vertices_do_not_change_the_image(seed in any::<u64>(), t in 0.05..0.95f64) {
        let p = random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), 0.3);
        let mut v = p.vertices().to_vec();
        let extra = v[0].lerp(v[1], t);
        v.insert(1, extra);
        prop_assert!(rasterize(&p).unwrap() == rasterize(&Polygon::new(v).unwrap()).unwrap());
    }
}
