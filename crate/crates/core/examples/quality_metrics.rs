//! Quality report for a correct and a mirrored correspondence on a rectangle.

use maptree::fmap::PointwiseMap;
use maptree::mesh::{default_seed_vertex, farthest_point_sample, geodesic_distances, normalize_to_unit_area};
use maptree::metrics::{quality_report, PairContext};
use maptree::shapes::{self, GridSymmetry};
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let (nx, ny) = (30, 20);
    let mesh = normalize_to_unit_area(&shapes::rectangle(nx, ny, 1.5));
    let n = mesh.num_vertices();
    let lap = build_laplacian(&mesh)?;
    let basis = compute_basis(&lap, 30)?;
    let samples = farthest_point_sample(&mesh, 150, default_seed_vertex(&mesh))?;
    let all: Vec<usize> = (0..n).collect();
    let geo = geodesic_distances(&mesh, &all)?;
    let ctx = PairContext {
        mesh1: &mesh,
        mesh2: &mesh,
        laplacian1: &lap,
        basis1: &basis,
        basis2: &basis,
        geo1: &geo,
        geo2: &geo,
        samples: &samples,
        k: 30,
    };

    let identity = PointwiseMap::identity(n);
    let mirror = PointwiseMap::new(shapes::grid_symmetry(nx, ny, GridSymmetry::MirrorX), n)?;
    for (name, map) in [("identity", &identity), ("mirror", &mirror)] {
        let report = quality_report(map, &ctx, Some(&identity))?;
        println!("{name}:\n{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    }
    Ok(())
}
