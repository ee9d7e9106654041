//! Refines single polygons with every strategy and writes one SVG per
//! result. Labels come from a trained model when a path is given, else
//! each polygon's intended class is used.
//!
//! ```text
//! cargo run --release --example refine_polygon -- [model.bin] [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use polyrefine::cnn::load_model;
use polyrefine::mesh::PolyMesh;
use polyrefine::plot::mesh_svg;
use polyrefine::refine::{refine_with_label, RefineOptions, Strategy};
use polyrefine::{Point2, Polygon};

fn poly(v: &[(f64, f64)]) -> polyrefine::Result<Polygon> {
    Polygon::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect())
}

fn main() -> polyrefine::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = args.first().map(load_model).transpose()?;
    let out = PathBuf::from(args.get(1).map_or("refine_polygon_out", String::as_str));
    fs::create_dir_all(&out)?;

    // a square whose bottom edge already carries a hanging node
    let hanging = poly(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])?;
    // a jittered hexagon with one aligned vertex
    let mut hex = Polygon::regular(6, Point2::new(0.0, 0.0), 1.0, 0.1)?.into_vertices();
    hex[2].x += 0.08;
    hex.insert(1, hex[0].lerp(hex[1], 0.3));
    let hex = Polygon::new(hex)?;
    let triangle = poly(&[(0.0, 0.0), (1.0, 0.0), (0.3, 0.9)])?;
    let cases = [("hanging", hanging, 4), ("hexagon", hex, 6), ("triangle", triangle, 3)];

    let opts = RefineOptions::default();
    for (name, p, intended) in &cases {
        let label = match &model {
            Some(net) => net.classify(p)?,
            None => *intended,
        };
        for s in Strategy::ALL {
            let r = refine_with_label(p, s, label, &opts)?;
            println!("{name:<9} label {label}  {s:<7} -> {} children ({:?})", r.children.len(), r.strategy_used);
            let mesh = PolyMesh::from_polygons(&r.children, 1e-9 * p.diameter())?;
            fs::write(out.join(format!("{name}_{s}.svg")), mesh_svg(&mesh, None, 300.0))?;
        }
    }
    println!("SVGs written to {}", out.display());
    Ok(())
}
