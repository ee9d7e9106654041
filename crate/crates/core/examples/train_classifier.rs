//! Generates a synthetic polygon dataset, trains the shape classifier and
//! prints the per-epoch history and the test confusion matrix.
//!
//! ```text
//! cargo run --release --example train_classifier -- [classes] [per_class] [seed]
//! ```

use std::time::Instant;

use polyrefine::cnn::{confusion_csv, train_classifier, TrainConfig};

fn main() -> polyrefine::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let classes = args.first().copied().unwrap_or(4) as usize;
    let per_class = args.get(1).copied().unwrap_or(2000) as usize;
    let seed = args.get(2).copied().unwrap_or(0);

    let start = Instant::now();
    let cfg = TrainConfig { seed, ..Default::default() };
    let trained = train_classifier(classes, per_class, &cfg)?;
    for e in &trained.history.epochs {
        println!(
            "epoch {:>2}  train loss {:.4} acc {:.3}  val loss {:.4} acc {:.3}",
            e.epoch, e.train_loss, e.train_accuracy, e.validation_loss, e.validation_accuracy
        );
    }
    println!("kept epoch {}", trained.history.best_epoch);
    print!("{}", confusion_csv(&trained.confusion));
    println!("test accuracy {:.2}%  ({:.1?})", 100.0 * trained.test_accuracy, start.elapsed());
    Ok(())
}
