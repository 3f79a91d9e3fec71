//! Embeds ZoomOut results from random initial maps in 2D and clusters them.
//!
//! cargo run --example map_landscape -- [count] [landscape.csv]

use maptree::analysis::{distance_matrices, kmeans, mds_embed, random_maps, silhouette, write_landscape_csv, MapEnsemble};
use maptree::fmap::{PointwiseMap, SpectralDomain};
use maptree::mesh::{default_seed_vertex, farthest_point_sample, geodesic_distances, normalize_to_unit_area};
use maptree::refine::{zoomout, RefineConfig};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let csv = args.next().unwrap_or_else(|| "landscape.csv".into());

    let mesh = normalize_to_unit_area(&shapes::rectangle(30, 20, 1.5));
    let cfg = RefineConfig { k_init: 3, k_step: 1, k_final: 20, sample_count: 120 };
    let basis = compute_basis(&build_laplacian(&mesh)?, cfg.k_final)?;
    let samples = farthest_point_sample(&mesh, cfg.sample_count, default_seed_vertex(&mesh))?;
    let domain = SpectralDomain::sampled(&basis, &samples);

    let m = samples.len();
    let seeds = random_maps(m, m, count, 0)?;
    let mut refined = Vec::with_capacity(count);
    for p in &seeds.maps {
        let out = zoomout(p, &domain, &domain, &cfg)?;
        // re-express sample indices as vertex ids
        refined.push(PointwiseMap::new(out.targets().iter().map(|&t| samples[t]).collect(), mesh.num_vertices())?);
    }
    let ensemble = MapEnsemble::new(refined)?;

    let geo = geodesic_distances(&mesh, &samples)?;
    let (mean, _) = distance_matrices(&ensemble, &geo)?;
    let mut landscape = mds_embed(&mean)?;
    let labels = kmeans(&landscape.coordinates, 4, 0)?;
    println!("stress {:.3}, silhouette {:.3}", landscape.stress, silhouette(&mean, &labels)?);
    for c in 0..4 {
        println!("cluster {c}: {} maps", labels.iter().filter(|&&l| l == c).count());
    }
    landscape.cluster_ids = Some(labels);
    write_landscape_csv(&csv, &landscape, None)?;
    println!("wrote {csv}");
    Ok(())
}
