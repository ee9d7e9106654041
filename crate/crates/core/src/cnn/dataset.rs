//! Synthetic training data: perturbed regular polygons, rasterized.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::{LabeledImage, FIRST_LABEL};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon};
use crate::raster::{rasterize, BinaryImage};

/// Knobs of the perturbation pipeline applied to each reference polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// Extra vertices inserted on random edges, drawn from `0..=max_extra_vertices`.
    pub max_extra_vertices: usize,
    /// Upper bound of the jitter radius, relative to the circumradius.
    pub max_jitter: f64,
    /// Range of the uniform scale factor.
    pub scale_range: (f64, f64),
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { max_extra_vertices: 3, max_jitter: 0.15, scale_range: (0.5, 1.0) }
    }
}

/// One perturbed sample of the reference `sides`-gon (unit circumradius).
///
/// Pipeline: insert aligned vertices on random edges, jitter every vertex
/// uniformly in a disc of radius `η`, rotate uniformly, scale uniformly.
/// Draws that self-intersect are rejected and redrawn.
pub fn perturbed_polygon<R: Rng>(sides: usize, cfg: &Perturbation, rng: &mut R) -> Polygon {
    loop {
        let mut pts: Vec<Point2> = (0..sides)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / sides as f64;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let extra = rng.gen_range(0..=cfg.max_extra_vertices);
        for _ in 0..extra {
            let e = rng.gen_range(0..pts.len());
            let a = pts[e];
            let b = pts[(e + 1) % pts.len()];
            let t = rng.gen_range(0.05..0.95);
            pts.insert(e + 1, a.lerp(b, t));
        }
        let eta = rng.gen_range(0.0..=cfg.max_jitter);
        for p in &mut pts {
            // uniform in the disc
            let r = eta * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..2.0 * PI);
            *p = *p + Point2::new(r * t.cos(), r * t.sin());
        }
        let angle = rng.gen_range(0.0..2.0 * PI);
        let scale = rng.gen_range(cfg.scale_range.0..=cfg.scale_range.1);
        let Ok(poly) = Polygon::new(pts) else { continue };
        if let Ok(p) = poly.transformed(scale, angle, Point2::default()) {
            return p;
        }
    }
}

/// `per_class` images for each class `L = 3, …, num_classes + 2`, in class
/// order. Sample `i` of class `c` uses its own ChaCha stream, so the result
/// does not depend on thread scheduling.
pub fn generate_dataset(num_classes: usize, per_class: usize, seed: u64) -> Vec<LabeledImage> {
    generate_dataset_with(num_classes, per_class, seed, &Perturbation::default())
}

pub fn generate_dataset_with(num_classes: usize, per_class: usize, seed: u64, cfg: &Perturbation) -> Vec<LabeledImage> {
    (0..num_classes * per_class)
        .into_par_iter()
        .map(|idx| {
            let label = idx / per_class;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let poly = perturbed_polygon(label + FIRST_LABEL, cfg, &mut rng);
            let image = rasterize(&poly).expect("generated polygons are non-degenerate");
            LabeledImage { image, label }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<LabeledImage>,
    pub validation: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

/// Shuffles with `seed` and cuts by `fractions` (train, validation); the
/// remainder is the test set.
pub fn split_dataset(mut data: Vec<LabeledImage>, fractions: (f64, f64), seed: u64) -> Result<Split> {
    let (ft, fv) = fractions;
    if !(ft > 0.0 && fv >= 0.0 && ft + fv <= 1.0) {
        return Err(Error::InvalidArgument(format!("bad split fractions {ft}/{fv}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    data.shuffle(&mut rng);
    let n = data.len();
    let n_train = (ft * n as f64).round() as usize;
    let n_val = ((fv * n as f64).round() as usize).min(n - n_train);
    let test = data.split_off(n_train + n_val);
    let validation = data.split_off(n_train);
    Ok(Split { train: data, validation, test })
}

/// Writes one P1 image per sample plus `labels.csv` (`file,label`).
pub fn save_dataset(data: &[LabeledImage], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut index = String::from("file,label\n");
    for (i, s) in data.iter().enumerate() {
        let name = format!("img_{i:06}.pbm");
        s.image.save_pbm(dir.join(&name))?;
        index.push_str(&format!("{name},{}\n", s.label + FIRST_LABEL));
    }
    fs::write(dir.join("labels.csv"), index)?;
    Ok(())
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<LabeledImage>> {
    let dir = dir.as_ref();
    let index = fs::read_to_string(dir.join("labels.csv"))?;
    let mut out = Vec::new();
    for (n, line) in index.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (file, label) =
            line.split_once(',').ok_or_else(|| Error::format("dataset index", format!("line {}", n + 1)))?;
        let label: usize = label
            .trim()
            .parse()
            .ok()
            .filter(|&l| l >= FIRST_LABEL)
            .ok_or_else(|| Error::format("dataset index", format!("bad label on line {}", n + 1)))?;
        out.push(LabeledImage { image: BinaryImage::load_pbm(dir.join(file))?, label: label - FIRST_LABEL });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_per_class() {
        let d = generate_dataset(4, 1, 0);
        assert_eq!(d.len(), 4);
        assert_eq!(d.iter().map(|s| s.label).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let d = generate_dataset(6, 3, 0);
        assert_eq!(d.len(), 18);
        assert_eq!(d.iter().filter(|s| s.label == 5).count(), 3);
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(generate_dataset(4, 5, 11), generate_dataset(4, 5, 11));
        assert_ne!(generate_dataset(4, 5, 11), generate_dataset(4, 5, 12));
    }

    #[test]
    fn perturbed_polygons_keep_enough_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for sides in 3..=8 {
            for _ in 0..50 {
                let p = perturbed_polygon(sides, &Perturbation::default(), &mut rng);
                assert!((sides..=sides + 3).contains(&p.len()));
                assert!(p.diameter() <= 2.0 * 1.15 + 1e-12);
            }
        }
    }

    #[test]
    fn split_sizes() {
        let d = generate_dataset(4, 25, 1);
        let s = split_dataset(d, (0.6, 0.2), 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (60, 20, 20));
        assert!(split_dataset(Vec::new(), (0.9, 0.2), 0).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = generate_dataset(4, 2, 5);
        save_dataset(&d, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), d);
    }
}
