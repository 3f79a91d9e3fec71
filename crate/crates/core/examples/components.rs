//! Splits a multi-object mesh into connected components and explores maps between them.

use maptree::maptree::{explore, init_tree, ExplorationConfig, PairDomains};
use maptree::mesh::{connected_components, default_seed_vertex, farthest_point_sample, normalize_to_unit_area};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis, SpectralBasis};
use maptree::TriangleMesh;

fn main() -> maptree::Result<()> {
    let (scene, sizes) = shapes::table_scene(3);
    let split = connected_components(&scene)?;
    println!("{} components, expected sizes {sizes:?}", split.component_meshes.len());

    let cfg = ExplorationConfig { k_final: 12, sample_count: 15, ..ExplorationConfig::default() };
    let parts: Vec<(TriangleMesh, SpectralBasis, Vec<usize>)> = split
        .component_meshes
        .iter()
        .map(|m| {
            let m = normalize_to_unit_area(m);
            let basis = compute_basis(&build_laplacian(&m)?, cfg.basis_size().min(m.num_vertices()))?;
            let samples = farthest_point_sample(&m, cfg.sample_count.min(m.num_vertices()), default_seed_vertex(&m))?;
            Ok((m, basis, samples))
        })
        .collect::<maptree::Result<_>>()?;

    for (i, (m, _, _)) in parts.iter().enumerate() {
        println!("component {i}: {} vertices", m.num_vertices());
    }
    for i in 0..parts.len() {
        for j in i..parts.len() {
            let (b1, s1) = (&parts[i].1, &parts[i].2);
            let (b2, s2) = (&parts[j].1, &parts[j].2);
            let k = cfg.k_final.min(b1.k()).min(b2.k());
            let pair_cfg = ExplorationConfig { k_final: k, sample_count: s1.len().min(s2.len()), ..cfg.clone() };
            let domains = PairDomains::new(b1, b2, s1, s2);
            let tree = explore(init_tree(b1, b2, pair_cfg)?, &domains)?;
            println!("pair ({i}, {j}): {} maps", tree.surviving_leaves().len());
        }
    }
    Ok(())
}
