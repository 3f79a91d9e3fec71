//! Writes the built-in test shapes as OFF files, ready for the `maptree` binary.
//!
//! cargo run --example shape_gallery -- out_dir

use std::path::PathBuf;

use maptree::mesh::io::{coordinate_colors, write_off, write_ply};
use maptree::shapes;

fn main() -> maptree::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "shapes".into()));
    std::fs::create_dir_all(&dir).map_err(|e| maptree::Error::Validation(e.to_string()))?;
    let gallery = [
        ("rectangle", shapes::rectangle(36, 30, 1.22)),
        ("square", shapes::grid(24, 24, 1.0, 1.0, shapes::Diagonal::Alternating)),
        ("patch", shapes::irregular_patch(36, 30, 2)),
        ("trapezoid", shapes::trapezoid(20, 16, 0.4)),
        ("bent_trapezoid", shapes::bend_y(&shapes::trapezoid(20, 16, 0.4), 0.8)),
        ("bumpy", shapes::bumpy_grid(40, 20, 7)),
        ("tables", shapes::table_scene(2).0),
    ];
    for (name, mesh) in &gallery {
        write_off(dir.join(format!("{name}.off")), mesh)?;
        write_ply(dir.join(format!("{name}.ply")), mesh, Some(&coordinate_colors(mesh)))?;
        println!("{name}: {} vertices, {} faces", mesh.num_vertices(), mesh.num_faces());
    }
    Ok(())
}
