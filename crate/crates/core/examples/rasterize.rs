//! Rasterizes a few polygons to 64x64 binary images and prints them as
//! ASCII art. Splitting an edge with an aligned vertex leaves the image
//! unchanged.
//!
//! ```text
//! cargo run --release --example rasterize
//! ```

use polyrefine::raster::rasterize;
use polyrefine::{Point2, Polygon};

fn show(name: &str, p: &Polygon) -> polyrefine::Result<()> {
    let img = rasterize(p)?;
    println!("{name}: {} vertices, {} lit pixels", p.len(), img.lit_count());
    let n = img.resolution();
    // two image rows per text line keeps the aspect roughly square
    for r in (0..n).step_by(2) {
        let line: String = (0..n).map(|c| if img.get(r, c) + img.get(r + 1, c) > 0 { '#' } else { '.' }).collect();
        println!("  {line}");
    }
    Ok(())
}

fn main() -> polyrefine::Result<()> {
    let pentagon = Polygon::regular(5, Point2::new(0.0, 0.0), 1.0, 0.3)?;
    show("pentagon", &pentagon)?;

    let l_shape = Polygon::new(
        [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]
            .into_iter()
            .map(|(x, y)| Point2::new(x, y))
            .collect(),
    )?;
    show("L-shape", &l_shape)?;

    let tri = Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), Point2::new(1.0, 2.0)])?;
    let mut v = tri.vertices().to_vec();
    v.insert(1, Point2::new(1.2, 0.0));
    v.insert(3, v[2].lerp(v[3], 0.4));
    let split = Polygon::new(v)?;
    let same = rasterize(&tri)? == rasterize(&split)?;
    println!("triangle with two aligned vertices rasterizes identically: {same}");
    Ok(())
}
