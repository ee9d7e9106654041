//! Mesh-level invariants under random partial refinement, metric ranges,
//! the VEM patch test and text round trips.

use polyrefine::mesh::{InitialGrid, MarkSet, PolyMesh};
use polyrefine::metrics::quality_report;
use polyrefine::refine::{LabelFn, RefineOptions, Strategy};
use polyrefine::vem::{h1_error, solve_case, ManufacturedCase};
use polyrefine::Polygon;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deterministic stand-in for the classifier that still exercises every
/// label.
fn pseudo_label(p: &Polygon) -> usize {
    let v = p.vertex(0);
    3 + ((v.x * 7919.0 + v.y * 104_729.0).abs() as usize + p.len()) % 4
}

fn assert_metrics_in_range(mesh: &PolyMesh) {
    let report = quality_report(mesh);
    for (e, row) in report.elements.iter().enumerate() {
        for &v in row {
            assert!((0.0..=1.0).contains(&v), "element {e}: metric {v} outside [0, 1]");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_partial_refinement_keeps_invariants(grid in 0usize..4, strategy in 0usize..3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mesh = InitialGrid::ALL[grid].generate().unwrap();
        let strategy = Strategy::ALL[strategy];
        let labels = LabelFn(pseudo_label);
        for _ in 0..2 {
            let marked: Vec<usize> = (0..mesh.num_elements()).filter(|_| rng.gen_bool(0.4)).collect();
            let marks = MarkSet::from_indices(marked.clone());
            let before = mesh.polygons();
            let next = mesh.refine(&marks, strategy, Some(&labels), &RefineOptions::default()).unwrap();
            next.validate().unwrap();
            prop_assert!((next.area() - 1.0).abs() < 1e-10);
            prop_assert!(next.num_elements() >= mesh.num_elements() + marked.len());
            // unmarked elements keep their area and index
            for (e, p) in before.iter().enumerate() {
                if !marks.contains(e) {
                    prop_assert!((next.element_polygon(e).area() - p.area()).abs() < 1e-12);
                }
            }
            assert_metrics_in_range(&next);
            mesh = next;
        }
        let back = PolyMesh::from_text(&mesh.to_text()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.elements(), mesh.elements());
    }
}

#[test]
fn patch_test_on_all_grid_families() {
    let case = ManufacturedCase::linear(0.7, -1.3, 0.25);
    let labels = LabelFn(pseudo_label);
    for grid in InitialGrid::ALL {
        let coarse = grid.generate().unwrap();
        let refined = coarse
            .refine(&MarkSet::from_indices(vec![0, 2]), Strategy::CnnRp, Some(&labels), &RefineOptions::default())
            .unwrap();
        for mesh in [coarse, refined] {
            let u = solve_case(&mesh, &case).unwrap();
            for (q, v) in mesh.vertices().iter().zip(&u) {
                assert!((v - (case.u)(*q)).abs() < 1e-9, "{grid}: nodal error at {q:?}");
            }
            assert!(h1_error(&mesh, &u, &case).unwrap() < 1e-9, "{grid}");
        }
    }
}

#[test]
fn uniform_refinement_metrics_stay_in_range() {
    let labels = LabelFn(pseudo_label);
    for grid in InitialGrid::ALL {
        for s in Strategy::ALL {
            let m = grid.generate().unwrap().refine_uniform(2, s, Some(&labels), &RefineOptions::default()).unwrap();
            m.validate().unwrap();
            assert_metrics_in_range(&m);
        }
    }
}

#[test]
fn corrupted_text_is_rejected() {
    let text = InitialGrid::Triangles.generate().unwrap().to_text();
    assert!(PolyMesh::from_text(&text.replacen("POLYMESH", "POLYGONS", 1)).is_err());
    let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
    assert!(PolyMesh::from_text(&truncated).is_err());
}
