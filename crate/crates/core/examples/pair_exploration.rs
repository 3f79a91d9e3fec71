//! Multiple correspondences between a flat trapezoid and a bent copy of it.

use maptree::fmap::PointwiseMap;
use maptree::maptree::{explore, init_tree, ExplorationConfig, PairDomains};
use maptree::mesh::{default_seed_vertex, farthest_point_sample, normalize_to_unit_area};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let flat = shapes::trapezoid(20, 16, 0.4);
    let bent = normalize_to_unit_area(&shapes::bend_y(&flat, 0.8));
    let flat = normalize_to_unit_area(&flat);
    let n = flat.num_vertices();

    let cfg = ExplorationConfig::default();
    let k = cfg.basis_size().min(n);
    let b1 = compute_basis(&build_laplacian(&flat)?, k)?;
    let b2 = compute_basis(&build_laplacian(&bent)?, k)?;
    let cfg = ExplorationConfig { k_final: cfg.k_final.min(k), sample_count: cfg.sample_count.min(n), ..cfg };
    let s1 = farthest_point_sample(&flat, cfg.sample_count, default_seed_vertex(&flat))?;
    let s2 = farthest_point_sample(&bent, cfg.sample_count, default_seed_vertex(&bent))?;
    let domains = PairDomains::new(&b1, &b2, &s1, &s2);

    let tree = explore(init_tree(&b1, &b2, cfg)?, &domains)?;
    // bending keeps vertex order, so the identity is the direct correspondence
    let identity = PointwiseMap::identity(n);
    for id in tree.surviving_leaves() {
        let dense = tree.nodes[id].dense.as_ref().expect("dense map");
        println!(
            "leaf {id:>3} ({}x{}) agrees with identity on {:.1}%",
            tree.nodes[id].dims().0,
            tree.nodes[id].dims().1,
            100.0 * dense.pi_12.agreement(&identity)
        );
    }
    for w in &tree.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
