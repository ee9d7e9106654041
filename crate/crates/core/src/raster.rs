//! Polygon to binary image conversion.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Polygon};

/// Side length of the square images fed to the classifier.
pub const RESOLUTION: usize = 64;

/// Blank band (in reference-box units) kept around the scaled polygon.
pub const MARGIN: f64 = 1.0 / RESOLUTION as f64;

/// Square {0,1} raster. Row 0 is the top of the reference box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros() -> Self {
        Self { pixels: vec![0; RESOLUTION * RESOLUTION] }
    }

    pub fn from_pixels(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != RESOLUTION * RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixels, got {}",
                RESOLUTION * RESOLUTION,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::InvalidArgument("pixel values must be 0 or 1".into()));
        }
        Ok(Self { pixels })
    }

    pub fn resolution(&self) -> usize {
        RESOLUTION
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * RESOLUTION + col]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn lit_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Plain (P1) PGM text.
    pub fn to_pbm_string(&self) -> String {
        let mut s = format!("P1\n{RESOLUTION} {RESOLUTION}\n");
        for row in self.pixels.chunks(RESOLUTION) {
            let line: Vec<&str> = row.iter().map(|&p| if p == 1 { "1" } else { "0" }).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_pbm_str(text: &str) -> Result<Self> {
        let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
        if tokens.next() != Some("P1") {
            return Err(Error::format("P1 image", "missing magic"));
        }
        let mut dim = || -> Result<usize> {
            tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| Error::format("P1 image", "bad dimensions"))
        };
        let (w, h) = (dim()?, dim()?);
        if w != RESOLUTION || h != RESOLUTION {
            return Err(Error::format("P1 image", format!("expected {RESOLUTION}x{RESOLUTION}, got {w}x{h}")));
        }
        // P1 allows pixels without separators, so read character by character
        let body: String = tokens.collect();
        let pixels: Vec<u8> = body
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::format("P1 image", format!("unexpected character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_pixels(pixels).map_err(|e| Error::format("P1 image", e.to_string()))
    }

    pub fn save_pbm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_pbm_string())?;
        Ok(())
    }

    pub fn load_pbm(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_pbm_str(&fs::read_to_string(path)?)
    }
}

/// Maps the polygon into the reference box `(0,1)²`: uniform scaling so the
/// longer bounding-box side spans `[MARGIN, 1 - MARGIN]`, centred.
pub fn normalize_to_box(p: &Polygon) -> Result<Vec<Point2>> {
    let (lo, hi) = p.bounding_box();
    let span = (hi.x - lo.x).max(hi.y - lo.y);
    if !(span > crate::geometry::REL_TOL) {
        return Err(Error::DegenerateInput);
    }
    let scale = (1.0 - 2.0 * MARGIN) / span;
    let center = lo.midpoint(hi);
    Ok(p.vertices()
        .iter()
        .map(|&v| Point2::new(0.5 + (v.x - center.x) * scale, 0.5 + (v.y - center.y) * scale))
        .collect())
}

/// Rasterizes `p`: pixel `(row, col)` is lit when its centre lies inside the
/// normalized polygon (even-odd scanline fill over pixel centres).
pub fn rasterize(p: &Polygon) -> Result<BinaryImage> {
    let pts = normalize_to_box(p)?;
    let n = pts.len();
    let mut img = BinaryImage::zeros();
    let mut crossings: Vec<f64> = Vec::with_capacity(n);
    for row in 0..RESOLUTION {
        let y = 1.0 - (row as f64 + 0.5) / RESOLUTION as f64;
        crossings.clear();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            if (a.y > y) != (b.y > y) {
                crossings.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        crossings.sort_by(f64::total_cmp);
        let line = &mut img.pixels[row * RESOLUTION..(row + 1) * RESOLUTION];
        for pair in crossings.chunks_exact(2) {
            for (col, px) in line.iter_mut().enumerate() {
                let x = (col as f64 + 0.5) / RESOLUTION as f64;
                if x > pair[0] && x < pair[1] {
                    *px = 1;
                }
            }
        }
    }
    if img.lit_count() == 0 {
        return Err(Error::DegenerateInput);
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    /// Independent oracle: crossing-number test at every pixel centre.
    fn brute_force(p: &Polygon) -> BinaryImage {
        let pts = normalize_to_box(p).unwrap();
        let mut px = vec![0u8; RESOLUTION * RESOLUTION];
        for row in 0..RESOLUTION {
            for col in 0..RESOLUTION {
                let q =
                    Point2::new((col as f64 + 0.5) / RESOLUTION as f64, 1.0 - (row as f64 + 0.5) / RESOLUTION as f64);
                let mut inside = false;
                for i in 0..pts.len() {
                    let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                    if (a.y > q.y) != (b.y > q.y) && q.x < a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                        inside = !inside;
                    }
                }
                px[row * RESOLUTION + col] = inside as u8;
            }
        }
        BinaryImage::from_pixels(px).unwrap()
    }

    #[test]
    fn unit_square_lights_62_by_62() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let img = rasterize(&sq).unwrap();
        assert_eq!(img, brute_force(&sq));
        assert_eq!(img.lit_count(), 62 * 62);
        assert_eq!(img.get(0, 0), 0);
        assert_eq!(img.get(1, 1), 1);
        assert_eq!(img.get(62, 62), 1);
        assert_eq!(img.get(63, 63), 0);
    }

    #[test]
    fn translation_and_scale_invariant() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let moved = poly(&[(100., 100.), (101., 100.), (101., 101.), (100., 101.)]);
        let scaled = poly(&[(0., 0.), (7., 0.), (7., 7.), (0., 7.)]);
        let img = rasterize(&sq).unwrap();
        assert_eq!(img, rasterize(&moved).unwrap());
        assert_eq!(img, rasterize(&scaled).unwrap());
    }

    #[test]
    fn scanline_matches_point_tests_on_nonconvex() {
        let l = poly(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        assert_eq!(rasterize(&l).unwrap(), brute_force(&l));
        let star = Polygon::new(
            (0..10)
                .map(|k| {
                    let t = std::f64::consts::PI * k as f64 / 5.0 + 0.1;
                    let r = if k % 2 == 0 { 1.0 } else { 0.4 };
                    Point2::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(rasterize(&star).unwrap(), brute_force(&star));
    }

    #[test]
    fn aligned_vertices_do_not_change_image() {
        let tri = poly(&[(0., 0.), (1., 0.), (0.3, 0.8)]);
        let split = poly(&[(0., 0.), (0.37, 0.), (1., 0.), (0.3, 0.8)]);
        assert_eq!(rasterize(&tri).unwrap(), rasterize(&split).unwrap());
    }

    #[test]
    fn pbm_round_trip() {
        let tri = poly(&[(0., 0.), (1., 0.), (0.3, 0.8)]);
        let img = rasterize(&tri).unwrap();
        assert_eq!(BinaryImage::from_pbm_str(&img.to_pbm_string()).unwrap(), img);
        assert!(BinaryImage::from_pbm_str("P2\n64 64\n").is_err());
    }
}
