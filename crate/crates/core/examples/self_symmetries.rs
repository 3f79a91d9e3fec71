//! Enumerates the self-maps of a rectangle and picks the most symmetric non-identity one.

use maptree::maptree::{explore, init_tree, ExplorationConfig, PairDomains};
use maptree::mesh::{default_seed_vertex, farthest_point_sample, geodesic_distances, normalize_to_unit_area};
use maptree::select::{select_self_symmetry, DEFAULT_SYMMETRY_THRESHOLD};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let mesh = normalize_to_unit_area(&shapes::rectangle(36, 30, 1.22));
    let cfg = ExplorationConfig::default();
    let basis = compute_basis(&build_laplacian(&mesh)?, cfg.basis_size())?;
    let samples = farthest_point_sample(&mesh, cfg.sample_count, default_seed_vertex(&mesh))?;
    let domains = PairDomains::new(&basis, &basis, &samples, &samples);

    let tree = explore(init_tree(&basis, &basis, cfg)?, &domains)?;
    let leaves = tree.surviving_leaves();
    println!("{} nodes, {} surviving self-maps", tree.nodes.len(), leaves.len());

    let candidates: Vec<_> = leaves
        .iter()
        .map(|&id| {
            let node = &tree.nodes[id];
            (node.fmap.clone(), node.dense.as_ref().expect("dense map").pi_12.clone())
        })
        .collect();
    let geo = geodesic_distances(&mesh, &samples)?;
    for (i, (_, p)) in candidates.iter().enumerate() {
        let fixed = (0..p.domain_size()).filter(|&v| p.get(v) == v).count();
        println!("map {i}: {fixed} fixed vertices");
    }
    let choice = select_self_symmetry(&candidates, &basis.eigenvalues, &geo, &samples, DEFAULT_SYMMETRY_THRESHOLD)?;
    println!(
        "chosen map {} (mean displacement {:.3}, symmetry found: {})",
        choice.index, choice.displacement, !choice.no_symmetry_found
    );
    Ok(())
}
