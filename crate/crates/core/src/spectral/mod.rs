//! Cotangent Laplacian, truncated generalized eigenbasis, eigenvalue grouping and the
//! on-disk basis cache.

mod cache;
mod eigen;
pub mod sparse;

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub use cache::{cache_dir_from_env, compute_basis_cached, read_basis, write_basis, CACHE_ENV};
pub use eigen::{solve_dense, solve_krylov, DENSE_LIMIT};
pub use sparse::CsrMatrix;

/// Cotangents above this magnitude mark a degenerate angle.
pub const MAX_COT: f64 = 1e8;

/// Stiffness (cotangent) and lumped mass matrices of a mesh.
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    pub stiffness: CsrMatrix,
    /// Diagonal of the lumped mass matrix.
    pub mass: Vec<f64>,
}

impl LaplacianPair {
    pub fn num_vertices(&self) -> usize {
        self.mass.len()
    }
}

/// Builds the cotangent stiffness matrix and barycentric lumped mass.
pub fn build_laplacian(mesh: &TriangleMesh) -> Result<LaplacianPair> {
    let n = mesh.num_vertices();
    let p = mesh.positions();
    let mut triplets = Vec::with_capacity(mesh.num_faces() * 12);
    for (fi, f) in mesh.faces().iter().enumerate() {
        for c in 0..3 {
            // angle at corner c is opposite the edge (a, b)
            let (k, a, b) = (f[c], f[(c + 1) % 3], f[(c + 2) % 3]);
            let u = p[a] - p[k];
            let v = p[b] - p[k];
            let cross = u.cross(&v).norm();
            let cot = if cross > 0.0 { u.dot(&v) / cross } else { f64::INFINITY };
            if !cot.is_finite() || cot.abs() > MAX_COT {
                return Err(Error::DegenerateAngle { face: fi, cot });
            }
            let w = cot / 2.0;
            triplets.push((a, b, -w));
            triplets.push((b, a, -w));
            triplets.push((a, a, w));
            triplets.push((b, b, w));
        }
    }
    Ok(LaplacianPair {
        stiffness: CsrMatrix::from_triplets(n, triplets),
        mass: mesh.lumped_areas(),
    })
}

/// Truncated eigenbasis of `W phi = lambda M phi`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// n x k, column i is the i-th eigenfunction.
    pub eigenfunctions: DMatrix<f64>,
    pub mass: Vec<f64>,
}

impl SpectralBasis {
    pub fn num_vertices(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    /// First `k` eigenfunctions as an n x k matrix.
    pub fn phi(&self, k: usize) -> DMatrix<f64> {
        self.eigenfunctions.columns(0, k).into_owned()
    }

    /// Rows of the first `k` eigenfunctions at the given vertices.
    pub fn phi_rows(&self, rows: &[usize], k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), k, |i, j| self.eigenfunctions[(rows[i], j)])
    }

    /// Mass-weighted pseudoinverse `Phi^T M` of the first `k` eigenfunctions (k x n).
    pub fn pinv(&self, k: usize) -> DMatrix<f64> {
        let n = self.num_vertices();
        DMatrix::from_fn(k, n, |i, v| self.eigenfunctions[(v, i)] * self.mass[v])
    }

    /// Truncates to the first `k` columns.
    pub fn truncated(&self, k: usize) -> SpectralBasis {
        SpectralBasis {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenfunctions: self.phi(k),
            mass: self.mass.clone(),
        }
    }

    /// `||W phi_i - lambda_i M phi_i|| / ||M phi_i||` for every column.
    pub fn residuals(&self, laplacian: &LaplacianPair) -> Vec<f64> {
        let n = self.num_vertices();
        let mut w_phi = vec![0.0; n];
        (0..self.k())
            .map(|i| {
                let col = self.eigenfunctions.column(i);
                laplacian.stiffness.mul_vec(col.as_slice(), &mut w_phi);
                let lam = self.eigenvalues[i];
                let mut r2 = 0.0;
                let mut m2 = 0.0;
                for v in 0..n {
                    let mphi = self.mass[v] * col[v];
                    r2 += (w_phi[v] - lam * mphi).powi(2);
                    m2 += mphi * mphi;
                }
                (r2 / m2).sqrt()
            })
            .collect()
    }

    /// `||Phi^T M Phi - I||_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.pinv(self.k()) * &self.eigenfunctions;
        (gram - DMatrix::identity(self.k(), self.k())).norm()
    }
}

/// Smallest `k` eigenpairs, mass-orthonormal with the largest-magnitude entry of every
/// column made positive.
///
/// `k` may equal the vertex count, in which case the full basis is returned.
pub fn compute_basis(laplacian: &LaplacianPair, k: usize) -> Result<SpectralBasis> {
    let n = laplacian.num_vertices();
    if k == 0 || k > n {
        return Err(Error::KTooLarge {
            requested: k,
            available: n,
        });
    }
    let (eigenvalues, mut phi) = if n <= DENSE_LIMIT || 3 * k > n {
        solve_dense(laplacian, k)?
    } else {
        solve_krylov(laplacian, k, 1e-9)?
    };
    fix_signs(&mut phi);
    Ok(SpectralBasis {
        eigenvalues,
        eigenfunctions: phi,
        mass: laplacian.mass.clone(),
    })
}

pub(crate) fn fix_signs(phi: &mut DMatrix<f64>) {
    for mut col in phi.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Contiguous ranges of near-equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenGrouping {
    pub group_boundaries: Vec<Range<usize>>,
    pub epsilon: f64,
}

impl EigenGrouping {
    /// Greedily groups the first `count` eigenvalues.
    pub fn new(eigenvalues: &[f64], count: usize, epsilon: f64) -> Self {
        let count = count.min(eigenvalues.len());
        let mut group_boundaries = Vec::new();
        let mut start = 0;
        while start < count {
            let r = group_eigenvalues(&eigenvalues[..count], start, epsilon);
            start = r.end;
            group_boundaries.push(r);
        }
        EigenGrouping {
            group_boundaries,
            epsilon,
        }
    }
}

/// Largest range `start..=p` with `lambda_p - lambda_start <= epsilon` (0-based, half open).
pub fn group_eigenvalues(eigenvalues: &[f64], start: usize, epsilon: f64) -> Range<usize> {
    let base = eigenvalues[start];
    let mut end = start + 1;
    while end < eigenvalues.len() && eigenvalues[end] - base <= epsilon {
        end += 1;
    }
    start..end
}

/// Spectral coefficients `Phi^T M f`.
pub fn project_function(basis: &SpectralBasis, f: &[f64]) -> Result<DVector<f64>> {
    if f.len() != basis.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "function has {} values, basis has {} vertices",
            f.len(),
            basis.num_vertices()
        )));
    }
    let mf = DVector::from_iterator(f.len(), f.iter().zip(&basis.mass).map(|(a, m)| a * m));
    Ok(basis.eigenfunctions.tr_mul(&mf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::normalize_to_unit_area;
    use crate::shapes::{self, Diagonal};
    use nalgebra::Vector3;

    fn single(p: [[f64; 3]; 3]) -> TriangleMesh {
        TriangleMesh::new(
            p.iter().map(|q| Vector3::new(q[0], q[1], q[2])).collect(),
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn equilateral_weights() {
        let m = single([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]]);
        let lap = build_laplacian(&m).unwrap();
        // a boundary edge has one opposite angle: -(cot 60)/2
        let expected = -1.0 / (2.0 * 3f64.sqrt());
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert!((lap.stiffness.get(i, j) - expected).abs() < 1e-12);
        }
        for &a in &lap.mass {
            assert!((a - m.total_area() / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn right_angle_contributes_nothing() {
        let m = single([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let lap = build_laplacian(&m).unwrap();
        assert!(lap.stiffness.get(1, 2).abs() < 1e-15);
        assert!((lap.stiffness.get(0, 1) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn sliver_is_degenerate_angle() {
        let m = single([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1e-9, 0.0]]);
        assert!(matches!(build_laplacian(&m), Err(Error::DegenerateAngle { face: 0, .. })));
    }

    #[test]
    fn grid_row_sums_vanish() {
        let g = shapes::grid(5, 5, 1.0, 1.0, Diagonal::Uniform);
        let lap = build_laplacian(&g).unwrap();
        let scale = lap.stiffness.max_abs();
        for i in 0..g.num_vertices() {
            let s: f64 = lap.stiffness.row(i).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-8 * scale);
            for (j, v) in lap.stiffness.row(i) {
                assert_eq!(v, lap.stiffness.get(j, i));
            }
        }
        assert!(lap.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn constant_first_eigenfunction() {
        let g = normalize_to_unit_area(&shapes::bumpy_grid(10, 8, 2));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 1).unwrap();
        assert!(b.eigenvalues[0].abs() < 1e-6);
        for v in b.eigenfunctions.column(0).iter() {
            assert!((v - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn rectangle_ratio() {
        let g = normalize_to_unit_area(&shapes::grid(40, 20, 2.0, 1.0, Diagonal::Alternating));
        let lap = build_laplacian(&g).unwrap();
        let b = compute_basis(&lap, 4).unwrap();
        let ratio = b.eigenvalues[1] / b.eigenvalues[2];
        assert!((ratio - 0.25).abs() < 0.025, "{ratio}");
    }

    #[test]
    fn square_pair_is_degenerate_and_grouped() {
        let g = normalize_to_unit_area(&shapes::grid(16, 16, 1.0, 1.0, Diagonal::Alternating));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 5).unwrap();
        assert!((b.eigenvalues[1] - b.eigenvalues[2]).abs() < 1e-8 * b.eigenvalues[1]);
        assert_eq!(group_eigenvalues(&b.eigenvalues, 1, 1.0), 1..3);
    }

    #[test]
    fn grouping_examples() {
        let lam = [0.0, 13.01, 13.04, 15.0];
        assert_eq!(group_eigenvalues(&lam, 1, 1.0), 1..3);
        assert_eq!(group_eigenvalues(&lam, 3, 1.0), 3..4);
        assert_eq!(group_eigenvalues(&[0.0, 5.0, 10.0], 1, 1.0), 1..2);
        let g = EigenGrouping::new(&lam, 4, 1.0);
        assert_eq!(g.group_boundaries, vec![0..1, 1..3, 3..4]);
    }

    #[test]
    fn projection_examples() {
        let g = normalize_to_unit_area(&shapes::grid(8, 8, 1.0, 1.0, Diagonal::Alternating));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 6).unwrap();
        let e = project_function(&b, b.eigenfunctions.column(2).as_slice()).unwrap();
        for (i, c) in e.iter().enumerate() {
            assert!((c - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        let ones = vec![1.0; g.num_vertices()];
        let c = project_function(&b, &ones).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8 && c.rows(1, 5).norm() < 1e-8);

        let half: Vec<f64> = g.positions().iter().map(|p| (p.x < 0.5) as u8 as f64).collect();
        let got = project_function(&b, &half).unwrap();
        for i in 0..6 {
            let mut oracle = 0.0;
            for v in 0..g.num_vertices() {
                oracle += b.eigenfunctions[(v, i)] * b.mass[v] * half[v];
            }
            assert!((got[i] - oracle).abs() < 1e-12);
        }
    }
}
