//! Three uniform refinement passes of every strategy on the four coarse
//! grids, reporting element counts and count ratios. Trains a small
//! classifier first unless a model file is given.
//!
//! ```text
//! cargo run --release --example uniform_refinement -- [model.bin]
//! ```

use polyrefine::cnn::{load_model, train_classifier, Network, TrainConfig};
use polyrefine::mesh::InitialGrid;
use polyrefine::refine::{RefineOptions, Strategy};

fn model_from_args() -> polyrefine::Result<Network> {
    match std::env::args().nth(1) {
        Some(path) => load_model(path),
        None => {
            println!("training a 4-class model on 2000 samples per class...");
            let t = train_classifier(4, 2000, &TrainConfig::default())?;
            println!("test accuracy {:.2}%", 100.0 * t.test_accuracy);
            Ok(t.network)
        }
    }
}

fn main() -> polyrefine::Result<()> {
    let net = model_from_args()?;
    let opts = RefineOptions::default();
    println!(
        "{:<17} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
        "grid", "initial", "mp", "cnn-mp", "cnn-rp", "mp/rp", "mp/cmp"
    );
    for grid in InitialGrid::ALL {
        let mesh = grid.generate()?;
        let mut counts = Vec::new();
        for s in Strategy::ALL {
            counts.push(mesh.refine_uniform(3, s, Some(&net), &opts)?.num_elements());
        }
        println!(
            "{:<17} {:>7} {:>7} {:>7} {:>7} {:>7.2} {:>7.2}",
            grid.to_string(),
            mesh.num_elements(),
            counts[0],
            counts[1],
            counts[2],
            counts[0] as f64 / counts[2] as f64,
            counts[0] as f64 / counts[1] as f64
        );
    }
    Ok(())
}
