//! Median quality metrics after three uniform passes of every strategy on
//! the Voronoi grids, plus histogram SVGs of each refined mesh.
//!
//! ```text
//! cargo run --release --example mesh_quality -- [model.bin] [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use polyrefine::cnn::{load_model, train_classifier, TrainConfig};
use polyrefine::mesh::InitialGrid;
use polyrefine::metrics::{quality_report, METRIC_NAMES};
use polyrefine::plot::histogram_svg;
use polyrefine::refine::{RefineOptions, Strategy};

fn main() -> polyrefine::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let net = match args.first() {
        Some(p) => load_model(p)?,
        None => train_classifier(4, 2000, &TrainConfig::default())?.network,
    };
    let out = PathBuf::from(args.get(1).map_or("mesh_quality_out", String::as_str));
    fs::create_dir_all(&out)?;

    let opts = RefineOptions::default();
    for grid in [InitialGrid::Voronoi, InitialGrid::SmoothedVoronoi] {
        println!("{grid}");
        println!("  {:<7} {}", "", METRIC_NAMES.map(|m| format!("{m:>6}")).join(""));
        for s in Strategy::ALL {
            let mesh = grid.generate()?.refine_uniform(3, s, Some(&net), &opts)?;
            let report = quality_report(&mesh);
            let medians: String = report.summaries.iter().map(|m| format!("{:>6.3}", m.median)).collect();
            println!("  {:<7} {medians}", s.to_string());
            fs::write(out.join(format!("{grid}_{s}.svg")), histogram_svg(&report))?;
        }
    }
    println!("histograms written to {}", out.display());
    Ok(())
}
