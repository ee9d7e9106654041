//! Adaptive refinement of a problem with a boundary layer at x = 0:
//! marks the 30% of elements with the largest local error each step and
//! compares against uniform refinement, starting from the 36-cell
//! Voronoi grid.
//!
//! ```text
//! cargo run --release --example adaptive_study -- [strategy] [model.bin]
//! ```

use polyrefine::cnn::{load_model, train_classifier, TrainConfig};
use polyrefine::mesh::{mark_fixed_fraction, InitialGrid};
use polyrefine::refine::{Classifier, RefineOptions, Strategy};
use polyrefine::vem::{convergence_study, local_errors, solve_case, ManufacturedCase, StudyConfig};

fn main() -> polyrefine::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strategy: Strategy = args.first().map_or("cnn-rp", String::as_str).parse()?;
    let net = match (strategy.needs_classifier(), args.get(1)) {
        (false, _) => None,
        (true, Some(p)) => Some(load_model(p)?),
        (true, None) => Some(train_classifier(4, 2000, &TrainConfig::default())?.network),
    };
    let classifier = net.as_ref().map(|n| n as &dyn Classifier);
    let case = ManufacturedCase::layer();
    let mesh = InitialGrid::Voronoi.generate_fine()?;
    let opts = RefineOptions::default();

    // where does the first adaptive pass put its new elements?
    let u = solve_case(&mesh, &case)?;
    let marks = mark_fixed_fraction(&local_errors(&mesh, &u, &case)?, 0.3)?;
    let refined = mesh.refine(&marks, strategy, classifier, &opts)?;
    // children keep the parent's index for the first piece and are appended otherwise
    let fresh: Vec<usize> =
        marks.indices().iter().copied().chain(mesh.num_elements()..refined.num_elements()).collect();
    let near = fresh.iter().filter(|&&e| refined.element_polygon(e).centroid().x < 0.3).count();
    println!("first pass: {} marked, {} new elements, {near} of them with centroid x < 0.3", marks.len(), fresh.len());

    for (name, fraction, steps) in [("uniform", 1.0, 4), ("adaptive", 0.3, 8)] {
        let cfg = StudyConfig { strategy, fraction, steps, options: opts };
        let record = convergence_study(&mesh, &case, classifier, &cfg)?;
        println!("{name} ({strategy})");
        for r in &record.steps {
            println!("  dofs {:>6}  elements {:>6}  error {:.4e}", r.dofs, r.elements, r.error);
        }
    }
    Ok(())
}
