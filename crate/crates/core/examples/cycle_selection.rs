//! Consistent map selection over three shapes from identity/mirror candidates.

use maptree::fmap::{pointwise_to_functional, PointwiseMap};
use maptree::select::{cycle_energy, select_by_cycles, Candidate, CandidateSet, PairCandidates};
use maptree::shapes::{self, GridSymmetry};
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let (nx, ny, k) = (30, 20, 20);
    let mesh = shapes::rectangle(nx, ny, 1.5);
    let n = mesh.num_vertices();
    let basis = compute_basis(&build_laplacian(&mesh)?, k)?;
    let identity = PointwiseMap::identity(n);
    let mirror = PointwiseMap::new(shapes::grid_symmetry(nx, ny, GridSymmetry::MirrorX), n)?;
    let c_id = pointwise_to_functional(&identity, &basis, &basis, k, k)?.matrix;
    let c_mirror = pointwise_to_functional(&mirror, &basis, &basis, k, k)?.matrix;

    // the orientation cue is misleading on pair (0, 2)
    let flips = [(0, 2, [0.6, 0.4]), (0, 1, [0.05, 0.9]), (1, 2, [0.1, 0.8])];
    let pairs = flips
        .iter()
        .map(|&(a, b, f)| PairCandidates {
            a,
            b,
            candidates: vec![
                Candidate { fmap: c_id.clone(), orientation_flip: f[0] },
                Candidate { fmap: c_mirror.clone(), orientation_flip: f[1] },
            ],
        })
        .collect();
    let set = CandidateSet::new(pairs)?;
    let triplets = [[0, 1, 2]];

    let result = select_by_cycles(&set, &triplets, 5)?;
    for u in &result.history {
        println!(
            "sweep {}: pair {} switched {} -> {} (energy {:.3} -> {:.3})",
            u.sweep, u.pair, u.from, u.to, u.energy_before, u.energy_after
        );
    }
    println!("chosen {:?}, converged {}", result.chosen, result.converged);
    for (i, p) in set.pairs().iter().enumerate() {
        let e = cycle_energy(&set, i, &p.candidates[result.chosen[i]].fmap, &result.chosen, &triplets)?;
        println!("pair ({}, {}) cycle energy {e:.2e}", p.a, p.b);
    }
    Ok(())
}
