//! Command-line front end. Each subcommand writes fixed file names into
//! `--out-dir`; see `polyrefine --help`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cnn::{
    confusion_csv, generate_dataset, load_dataset, load_model, save_dataset, save_model, train_classifier,
    train_on_dataset, Network, TrainConfig, TrainedClassifier,
};
use crate::error::{Error, Result};
use crate::mesh::{load_mesh, mark_fixed_fraction, save_mesh, InitialGrid, MarkSet, PolyMesh};
use crate::metrics::quality_report;
use crate::plot::{histogram_svg, loglog_svg, mesh_svg, Series};
use crate::refine::{Classifier, RefineOptions, Strategy};
use crate::vem::{convergence_study, local_errors, solve_case, CaseName, StudyConfig};

const OUTPUTS: &str = "\
Outputs (written into --out-dir):
  gen-dataset  dataset/labels.csv, dataset/img_NNNNNN.pbm
  train        model.bin, history.csv, confusion.csv
  classify     labels.csv
  refine       refined.mesh, refined.svg, passes.csv
  quality      quality.csv, quality_summary.csv, quality.svg
  study        convergence.csv, convergence.svg

--mesh accepts a mesh file or one of: triangles, voronoi, smoothed-voronoi, nonconvex,
optionally suffixed with -fine for the finer grid of that family.";

#[derive(Debug, Parser)]
#[command(name = "polyrefine", version, about = "CNN-guided refinement of polygonal meshes", after_help = OUTPUTS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled dataset of perturbed reference polygons.
    GenDataset(DatasetArgs),
    /// Train the shape classifier.
    Train(TrainArgs),
    /// Label every element of a mesh.
    Classify(ClassifyArgs),
    /// Refine a mesh uniformly or adaptively.
    Refine(RefineArgs),
    /// Per-element quality metrics with histograms.
    Quality(QualityArgs),
    /// VEM convergence study under repeated refinement.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory receiving all outputs.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Number of classes: polygons with 3 to classes + 2 vertices.
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 2000)]
    pub per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Train on a directory written by gen-dataset instead of fresh samples.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long, default_value = "triangles")]
    pub mesh: String,
    /// Trained model, required by the cnn-mp and cnn-rp strategies.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// mp, cnn-mp or cnn-rp.
    #[arg(long, default_value = "mp")]
    pub strategy: Strategy,
    /// Fraction of elements refined per pass; below 1 the elements with the
    /// largest VEM error for --case are marked.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    #[arg(long, default_value_t = 3)]
    pub steps: usize,
    /// sine or layer.
    #[arg(long, default_value = "sine")]
    pub case: CaseName,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[arg(long, default_value = "triangles")]
    pub mesh: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub refine: RefineArgs,
}

/// Runs one command and returns a one-line summary for the terminal.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::GenDataset(a) => gen_dataset(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Refine(a) => refine(a),
        Command::Quality(a) => quality(a),
        Command::Study(a) => study(&a.refine),
    }
}

fn out_dir(c: &Common) -> Result<&Path> {
    fs::create_dir_all(&c.out_dir)?;
    Ok(&c.out_dir)
}

fn check_classes(classes: usize) -> Result<()> {
    if classes == 0 {
        return Err(Error::InvalidArgument("--classes must be at least 1".into()));
    }
    Ok(())
}

/// A mesh file if `spec` names an existing path, else a built-in grid
/// (`voronoi`, `voronoi-fine`, ...).
pub fn open_mesh(spec: &str) -> Result<PolyMesh> {
    if Path::new(spec).is_file() {
        return load_mesh(spec);
    }
    let (name, fine) = match spec.strip_suffix("-fine") {
        Some(name) => (name, true),
        None => (spec, false),
    };
    let grid = name
        .parse::<InitialGrid>()
        .map_err(|_| Error::InvalidArgument(format!("'{spec}' is neither a mesh file nor a built-in grid")))?;
    if fine {
        grid.generate_fine()
    } else {
        grid.generate()
    }
}

fn open_model(args: &MeshArgs, required: bool) -> Result<Option<Network>> {
    match &args.model {
        Some(p) => load_model(p).map(Some),
        None if required => Err(Error::InvalidArgument("this strategy needs --model".into())),
        None => Ok(None),
    }
}

fn check_schedule(fraction: f64, steps: usize) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("--fraction must lie in (0, 1], got {fraction}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("--steps must be at least 1".into()));
    }
    Ok(())
}

fn gen_dataset(a: &DatasetArgs) -> Result<String> {
    check_classes(a.classes)?;
    let dir = out_dir(&a.common)?.join("dataset");
    let data = generate_dataset(a.classes, a.per_class, a.seed);
    save_dataset(&data, &dir)?;
    Ok(format!("wrote {} images to {}", data.len(), dir.display()))
}

fn train(a: &TrainArgs) -> Result<String> {
    let d = &a.data;
    check_classes(d.classes)?;
    let cfg = TrainConfig { seed: d.seed, ..Default::default() };
    let trained: TrainedClassifier = match &a.dataset {
        Some(dir) => train_on_dataset(load_dataset(dir)?, d.classes, &cfg)?,
        None => train_classifier(d.classes, d.per_class, &cfg)?,
    };
    let dir = out_dir(&d.common)?;
    save_model(&trained.network, dir.join("model.bin"))?;
    fs::write(dir.join("history.csv"), trained.history.to_csv())?;
    fs::write(dir.join("confusion.csv"), confusion_csv(&trained.confusion))?;
    Ok(format!("test accuracy {:.2}% after {} epochs", 100.0 * trained.test_accuracy, trained.history.epochs.len()))
}

fn classify(a: &ClassifyArgs) -> Result<String> {
    let mesh = open_mesh(&a.mesh.mesh)?;
    let net = open_model(&a.mesh, true)?.expect("required model");
    let labels = net.classify_all(&mesh.polygons())?;
    let mut csv = String::from("element,label\n");
    for (e, l) in labels.iter().enumerate() {
        let _ = writeln!(csv, "{e},{l}");
    }
    fs::write(out_dir(&a.common)?.join("labels.csv"), csv)?;
    Ok(format!("classified {} elements", labels.len()))
}

fn refine(a: &RefineArgs) -> Result<String> {
    check_schedule(a.fraction, a.steps)?;
    let mut mesh = open_mesh(&a.mesh.mesh)?;
    let net = open_model(&a.mesh, a.strategy.needs_classifier())?;
    let classifier = net.as_ref().map(|n| n as &dyn Classifier);
    let case = a.case.case();
    let opts = RefineOptions::default();
    let mut passes = String::from("pass,elements,vertices\n");
    let _ = writeln!(passes, "0,{},{}", mesh.num_elements(), mesh.num_vertices());
    for pass in 1..=a.steps {
        let marks = if a.fraction < 1.0 {
            let u = solve_case(&mesh, &case)?;
            mark_fixed_fraction(&local_errors(&mesh, &u, &case)?, a.fraction)?
        } else {
            MarkSet::all(mesh.num_elements())
        };
        mesh = mesh.refine(&marks, a.strategy, classifier, &opts)?;
        let _ = writeln!(passes, "{pass},{},{}", mesh.num_elements(), mesh.num_vertices());
    }
    let dir = out_dir(&a.common)?;
    save_mesh(&mesh, dir.join("refined.mesh"))?;
    fs::write(dir.join("refined.svg"), mesh_svg(&mesh, None, 600.0))?;
    fs::write(dir.join("passes.csv"), passes)?;
    Ok(format!("{} elements after {} passes of {}", mesh.num_elements(), a.steps, a.strategy))
}

fn quality(a: &QualityArgs) -> Result<String> {
    let mesh = open_mesh(&a.mesh)?;
    let report = quality_report(&mesh);
    let dir = out_dir(&a.common)?;
    fs::write(dir.join("quality.csv"), report.to_csv())?;
    fs::write(dir.join("quality_summary.csv"), report.summary_csv())?;
    fs::write(dir.join("quality.svg"), histogram_svg(&report))?;
    Ok(format!("scored {} elements", mesh.num_elements()))
}

fn study(a: &RefineArgs) -> Result<String> {
    check_schedule(a.fraction, a.steps)?;
    let mesh = open_mesh(&a.mesh.mesh)?;
    let net = open_model(&a.mesh, a.strategy.needs_classifier())?;
    let cfg =
        StudyConfig { strategy: a.strategy, fraction: a.fraction, steps: a.steps, options: RefineOptions::default() };
    let record = convergence_study(&mesh, &a.case.case(), net.as_ref().map(|n| n as &dyn Classifier), &cfg)?;
    let dir = out_dir(&a.common)?;
    fs::write(dir.join("convergence.csv"), record.to_csv())?;
    let label = a.strategy.to_string();
    let series = [Series { label: &label, points: record.steps.iter().map(|s| (s.dofs as f64, s.error)).collect() }];
    fs::write(dir.join("convergence.svg"), loglog_svg(&series, "degrees of freedom", "error"))?;
    let last = record.steps.last().expect("study has at least one step");
    Ok(format!("error {:.3e} at {} dofs", last.error, last.dofs))
}
