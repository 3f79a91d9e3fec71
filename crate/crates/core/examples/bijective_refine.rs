//! Repairs a corrupted correspondence with Bijective ZoomOut and prints the energy log.

use maptree::fmap::PointwiseMap;
use maptree::maptree::{densify, PairDomains};
use maptree::mesh::{default_seed_vertex, farthest_point_sample};
use maptree::refine::{bijective_zoomout_logged, energy_log_csv, pair_from_fmap, RefineConfig};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> maptree::Result<()> {
    let mesh = shapes::bumpy_grid(40, 24, 5);
    let n = mesh.num_vertices();
    let order = shapes::random_permutation(n, 1);
    let copy = mesh.permuted(&order)?;
    let truth = PointwiseMap::new(shapes::invert_permutation(&order), n)?;

    let cfg = RefineConfig { k_init: 5, k_step: 1, k_final: 40, sample_count: 300 };
    let b1 = compute_basis(&build_laplacian(&mesh)?, cfg.k_final)?;
    let b2 = compute_basis(&build_laplacian(&copy)?, cfg.k_final)?;
    let s1 = farthest_point_sample(&mesh, cfg.sample_count, default_seed_vertex(&mesh))?;
    let s2 = farthest_point_sample(&copy, cfg.sample_count, default_seed_vertex(&copy))?;
    let domains = PairDomains::new(&b1, &b2, &s1, &s2);

    // send a fifth of the vertices to random places
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut targets = truth.targets().to_vec();
    let mut picked: Vec<usize> = (0..n).collect();
    picked.shuffle(&mut rng);
    for &v in &picked[..n / 5] {
        targets[v] = rng.gen_range(0..n);
    }
    let noisy = PointwiseMap::new(targets, n)?;
    println!("initial agreement {:.1}%", 100.0 * noisy.agreement(&truth));

    let c21 = domains.full1.pull_back(&noisy, &domains.full2, cfg.k_init, cfg.k_init)?;
    let seed = pair_from_fmap(&c21, &domains.sampled1, &domains.sampled2)?;
    let (refined, log) = bijective_zoomout_logged(&seed, &domains.sampled1, &domains.sampled2, &cfg)?;
    let dense = densify(&refined, cfg.k_final, cfg.k_final, &domains)?;
    println!("refined agreement {:.1}%", 100.0 * dense.pi_12.agreement(&truth));
    print!("{}", energy_log_csv(&log));
    Ok(())
}
