//! Solves the Poisson problem with the lowest-order virtual element method
//! on uniformly refined meshes and reports the error against the number of
//! degrees of freedom for every strategy.
//!
//! ```text
//! cargo run --release --example vem_convergence -- [grid] [model.bin]
//! ```

use std::fs;

use polyrefine::cnn::{load_model, train_classifier, TrainConfig};
use polyrefine::mesh::InitialGrid;
use polyrefine::plot::{loglog_svg, Series};
use polyrefine::refine::{RefineOptions, Strategy};
use polyrefine::vem::{convergence_study, ManufacturedCase, StudyConfig};

fn main() -> polyrefine::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let grid: InitialGrid = args.first().map_or("triangles", String::as_str).parse()?;
    let net = match args.get(1) {
        Some(p) => load_model(p)?,
        None => train_classifier(4, 2000, &TrainConfig::default())?.network,
    };
    let case = ManufacturedCase::sine();
    let mut series = Vec::new();
    let labels: Vec<String> = Strategy::ALL.iter().map(Strategy::to_string).collect();
    for (s, label) in Strategy::ALL.into_iter().zip(&labels) {
        let cfg = StudyConfig { strategy: s, fraction: 1.0, steps: 4, options: RefineOptions::default() };
        let record = convergence_study(&grid.generate()?, &case, Some(&net), &cfg)?;
        println!("{s} on {grid}");
        for r in &record.steps {
            println!("  dofs {:>6}  h {:.4}  error {:.4e}", r.dofs, r.h, r.error);
        }
        println!("  final slope {:.3}", record.final_slope().unwrap_or(f64::NAN));
        series.push(Series { label, points: record.steps.iter().map(|r| (r.dofs as f64, r.error)).collect() });
    }
    fs::write("vem_convergence.svg", loglog_svg(&series, "degrees of freedom", "H1 error"))?;
    println!("plot written to vem_convergence.svg");
    Ok(())
}
