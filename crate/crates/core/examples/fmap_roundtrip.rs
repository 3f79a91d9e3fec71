//! Pointwise map -> functional map -> pointwise map on a relabelled copy of a mesh.

use maptree::fmap::{functional_to_pointwise, pointwise_to_functional, PointwiseMap};
use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let mesh = shapes::bumpy_grid(12, 8, 3);
    let n = mesh.num_vertices();
    let order = shapes::random_permutation(n, 11);
    let copy = mesh.permuted(&order)?;

    let b1 = compute_basis(&build_laplacian(&mesh)?, n)?;
    let b2 = compute_basis(&build_laplacian(&copy)?, n)?;

    // vertex v of the original sits at position inv[v] of the copy
    let truth = PointwiseMap::new(shapes::invert_permutation(&order), n)?;
    for k in [10, 30, n] {
        let c = pointwise_to_functional(&truth, &b1, &b2, k, k)?;
        let back = functional_to_pointwise(&c, &b1, &b2, None)?;
        println!("k = {k:>3}: ortho energy {:.2e}, recovered {:.1}%", c.energy_ortho(), 100.0 * back.agreement(&truth));
    }
    Ok(())
}
