//! Laplace-Beltrami eigenpairs of a rectangle, compared with the analytic spectrum.

use maptree::shapes;
use maptree::spectral::{build_laplacian, compute_basis};

fn main() -> maptree::Result<()> {
    let (w, h) = (2.0, 1.0);
    let mesh = shapes::grid(40, 20, w, h, shapes::Diagonal::Alternating);
    let lap = build_laplacian(&mesh)?;
    let basis = compute_basis(&lap, 12)?;

    // Neumann eigenvalues of a w x h rectangle are pi^2 (i^2/w^2 + j^2/h^2)
    let mut analytic: Vec<f64> = (0..8)
        .flat_map(|i| (0..8).map(move |j| (i, j)))
        .map(|(i, j)| std::f64::consts::PI.powi(2) * ((i * i) as f64 / (w * w) + (j * j) as f64 / (h * h)))
        .collect();
    analytic.sort_by(f64::total_cmp);

    let residuals = basis.residuals(&lap);
    println!("{:>3} {:>12} {:>12} {:>10}", "i", "mesh", "analytic", "residual");
    for i in 0..basis.k() {
        println!("{i:>3} {:>12.5} {:>12.5} {:>10.2e}", basis.eigenvalues[i], analytic[i], residuals[i]);
    }
    println!("orthonormality error {:.2e}", basis.orthonormality_error());
    Ok(())
}
