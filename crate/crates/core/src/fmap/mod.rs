//! Pointwise and functional maps, conversions between them, and the spectral energies
//! used to judge functional maps.
//!
//! Orientation: a functional map `C_21` has one row per basis function of the source
//! shape S1 and one column per basis function of the target S2. It is built from a
//! pointwise map S1 -> S2 and pulls functions on S2 back to S1.

mod energy;
mod io;
mod nn;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

pub use energy::{
    embed_block, energy_lap_comm, energy_ortho, energy_zoomout, fmap_distance, normalized_energies,
};
pub use io::{read_fmap_json, read_pointwise_text, write_fmap_json, write_pointwise_text};
pub use nn::nearest_rows;

/// A map from the vertices (or samples) of one shape to those of another, in index form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointwiseMap {
    targets: Vec<usize>,
    codomain_size: usize,
}

impl PointwiseMap {
    pub fn new(targets: Vec<usize>, codomain_size: usize) -> Result<Self> {
        if let Some((i, &t)) = targets.iter().enumerate().find(|(_, &t)| t >= codomain_size) {
            return Err(Error::DimensionMismatch(format!(
                "entry {i} maps to {t}, codomain has {codomain_size} elements"
            )));
        }
        Ok(PointwiseMap {
            targets,
            codomain_size,
        })
    }

    pub fn identity(n: usize) -> Self {
        PointwiseMap {
            targets: (0..n).collect(),
            codomain_size: n,
        }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn domain_size(&self) -> usize {
        self.targets.len()
    }

    pub fn codomain_size(&self) -> usize {
        self.codomain_size
    }

    pub fn get(&self, i: usize) -> usize {
        self.targets[i]
    }

    /// Fraction of entries on which two maps agree.
    pub fn agreement(&self, other: &PointwiseMap) -> f64 {
        if self.targets.is_empty() {
            return 1.0;
        }
        let same = self
            .targets
            .iter()
            .zip(&other.targets)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.targets.len() as f64
    }

    /// `other(self(i))`.
    pub fn then(&self, other: &PointwiseMap) -> PointwiseMap {
        PointwiseMap {
            targets: self.targets.iter().map(|&t| other.targets[t]).collect(),
            codomain_size: other.codomain_size,
        }
    }

    pub fn is_bijection(&self) -> bool {
        if self.targets.len() != self.codomain_size {
            return false;
        }
        let mut seen = vec![false; self.codomain_size];
        self.targets.iter().all(|&t| !std::mem::replace(&mut seen[t], true))
    }
}

/// Dense functional map matrix with the ids of the shapes it relates.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    pub matrix: DMatrix<f64>,
    pub source_id: String,
    pub target_id: String,
}

impl FunctionalMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        FunctionalMap {
            matrix,
            source_id: String::new(),
            target_id: String::new(),
        }
    }

    pub fn with_ids(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_id = source.into();
        self.target_id = target.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn energy_ortho(&self) -> f64 {
        energy_ortho(&self.matrix)
    }

    pub fn transpose(&self) -> FunctionalMap {
        FunctionalMap {
            matrix: self.matrix.transpose(),
            source_id: self.target_id.clone(),
            target_id: self.source_id.clone(),
        }
    }
}

fn check_k(k: usize, basis: &SpectralBasis, which: &str) -> Result<()> {
    if k == 0 || k > basis.k() {
        return Err(Error::DimensionMismatch(format!(
            "{which} needs {k} basis functions, basis holds {}",
            basis.k()
        )));
    }
    Ok(())
}

/// `C_21 = Phi1^T M1 Pi_12 Phi2` for a pointwise map over all vertices of S1.
pub fn pointwise_to_functional(
    pmap: &PointwiseMap,
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    k1: usize,
    k2: usize,
) -> Result<FunctionalMap> {
    check_k(k1, basis1, "source")?;
    check_k(k2, basis2, "target")?;
    if pmap.domain_size() != basis1.num_vertices() || pmap.codomain_size() != basis2.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}->{}, bases have {} and {} vertices",
            pmap.domain_size(),
            pmap.codomain_size(),
            basis1.num_vertices(),
            basis2.num_vertices()
        )));
    }
    let pulled = basis2.phi_rows(pmap.targets(), k2);
    Ok(FunctionalMap::new(basis1.pinv(k1) * pulled))
}

/// Nearest-neighbor recovery `Pi_12 = NN(Phi2 C_21^T, Phi1)`: each source row of `Phi1`
/// is sent to the closest row of `Phi2 C_21^T`, ties to the lowest index.
///
/// `candidates` optionally restricts the rows on each side to sample sets; the returned
/// map then indexes into those sets.
pub fn functional_to_pointwise(
    fmap: &FunctionalMap,
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    candidates: Option<(&[usize], &[usize])>,
) -> Result<PointwiseMap> {
    let (k1, k2) = (fmap.rows(), fmap.cols());
    check_k(k1, basis1, "source")?;
    check_k(k2, basis2, "target")?;
    let all1: Vec<usize>;
    let all2: Vec<usize>;
    let (rows1, rows2) = match candidates {
        Some(c) => c,
        None => {
            all1 = (0..basis1.num_vertices()).collect();
            all2 = (0..basis2.num_vertices()).collect();
            (&all1[..], &all2[..])
        }
    };
    let queries = basis1.phi_rows(rows1, k1);
    let cands = basis2.phi_rows(rows2, k2) * fmap.matrix.transpose();
    PointwiseMap::new(nearest_rows(&cands, &queries), rows2.len())
}

/// A shape's basis restricted to a set of vertices, with the matching projection.
///
/// Over the full vertex set the projection is the mass-weighted transpose; over a
/// sample subset it is a damped least-squares fit to the sample values.
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    vertices: Vec<usize>,
    phi: DMatrix<f64>,
    mass: Option<Vec<f64>>,
    eigenvalues: Vec<f64>,
    /// Cholesky factor of the damped Gram matrix of all sampled columns. The factor of
    /// a leading k x k block is the leading block of this one.
    gram_factor: Option<DMatrix<f64>>,
}

/// Tikhonov damping of the sampled least-squares projection.
pub const SAMPLE_DAMPING: f64 = 1e-9;

impl SpectralDomain {
    pub fn full(basis: &SpectralBasis) -> Self {
        SpectralDomain {
            vertices: (0..basis.num_vertices()).collect(),
            phi: basis.eigenfunctions.clone(),
            mass: Some(basis.mass.clone()),
            eigenvalues: basis.eigenvalues.clone(),
            gram_factor: None,
        }
    }

    pub fn sampled(basis: &SpectralBasis, samples: &[usize]) -> Self {
        let phi = basis.phi_rows(samples, basis.k());
        let mut gram = phi.tr_mul(&phi);
        for i in 0..gram.nrows() {
            gram[(i, i)] += SAMPLE_DAMPING;
        }
        SpectralDomain {
            vertices: samples.to_vec(),
            phi,
            mass: None,
            eigenvalues: basis.eigenvalues.clone(),
            gram_factor: gram.cholesky().map(|c| c.unpack()),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Lumped masses of the full vertex set; None for sample sets.
    pub fn mass(&self) -> Option<&[f64]> {
        self.mass.as_deref()
    }

    pub fn is_full(&self) -> bool {
        self.mass.is_some()
    }

    /// Mesh vertex index of each row.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn kmax(&self) -> usize {
        self.phi.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// First `k` basis columns at every row.
    pub fn phi(&self, k: usize) -> DMatrix<f64> {
        self.phi.columns(0, k).into_owned()
    }

    /// First `k` basis columns at the given rows (row indices of this domain).
    pub fn phi_at(&self, rows: &[usize], k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), k, |i, j| self.phi[(rows[i], j)])
    }

    /// Spectral coefficients (k x c) of the columns of `values` (len x c).
    pub fn project(&self, values: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        let phi = self.phi.columns(0, k);
        match &self.mass {
            Some(mass) => {
                let weighted = DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| {
                    values[(i, j)] * mass[i]
                });
                Ok(phi.tr_mul(&weighted))
            }
            None => {
                let rhs = phi.tr_mul(values);
                if let Some(l) = &self.gram_factor {
                    let l = l.view((0, 0), (k, k));
                    return l
                        .solve_lower_triangular(&rhs)
                        .and_then(|y| l.tr_solve_lower_triangular(&y))
                        .ok_or(Error::SingularLeastSquares);
                }
                let mut gram = phi.tr_mul(&phi);
                for i in 0..k {
                    gram[(i, i)] += SAMPLE_DAMPING;
                }
                gram.cholesky()
                    .map(|c| c.solve(&rhs))
                    .ok_or(Error::SingularLeastSquares)
            }
        }
    }

    /// Functional map `Phi_self^+ Pi Phi_other` of size k_self x k_other for a
    /// pointwise map from this domain's rows to `other`'s rows.
    pub fn pull_back(
        &self,
        pmap: &PointwiseMap,
        other: &SpectralDomain,
        k_self: usize,
        k_other: usize,
    ) -> Result<DMatrix<f64>> {
        if pmap.domain_size() != self.len() || pmap.codomain_size() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "map is {}->{}, domains have {} and {} rows",
                pmap.domain_size(),
                pmap.codomain_size(),
                self.len(),
                other.len()
            )));
        }
        if k_self > self.kmax() || k_other > other.kmax() {
            return Err(Error::DimensionMismatch(format!(
                "requested {k_self}x{k_other} map from bases of {} and {}",
                self.kmax(),
                other.kmax()
            )));
        }
        self.project(&other.phi_at(pmap.targets(), k_other), k_self)
    }

    /// `NN(other.Phi C^T, self.Phi)` for a `k_self x k_other` map `c`.
    pub fn nn_from_fmap(&self, c: &DMatrix<f64>, other: &SpectralDomain) -> Result<PointwiseMap> {
        let (ks, ko) = c.shape();
        if ks > self.kmax() || ko > other.kmax() {
            return Err(Error::DimensionMismatch(format!(
                "{ks}x{ko} map exceeds bases of {} and {}",
                self.kmax(),
                other.kmax()
            )));
        }
        let cands = other.phi(ko) * c.transpose();
        PointwiseMap::new(nearest_rows(&cands, &self.phi(ks)), other.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::normalize_to_unit_area;
    use crate::shapes;
    use crate::spectral::{build_laplacian, compute_basis};

    fn full_basis(m: &crate::TriangleMesh) -> SpectralBasis {
        let lap = build_laplacian(m).unwrap();
        compute_basis(&lap, m.num_vertices()).unwrap()
    }

    #[test]
    fn identity_is_identity_fmap() {
        let g = normalize_to_unit_area(&shapes::bumpy_grid(6, 5, 1));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 8).unwrap();
        let c = pointwise_to_functional(&PointwiseMap::identity(g.num_vertices()), &b, &b, 8, 8).unwrap();
        assert!((c.matrix - DMatrix::identity(8, 8)).norm() < 1e-6);
        let c1 = pointwise_to_functional(&PointwiseMap::identity(g.num_vertices()), &b, &b, 1, 1).unwrap();
        assert!((c1.matrix[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tetrahedron_cycle_matches_dense_oracle_and_round_trips() {
        let t = normalize_to_unit_area(&shapes::tetrahedron());
        let b = full_basis(&t);
        let p = PointwiseMap::new(vec![1, 2, 0, 3], 4).unwrap();
        let c = pointwise_to_functional(&p, &b, &b, 4, 4).unwrap();
        // explicit Phi1^T M1 P Phi2 with a 0/1 matrix P
        let mut pm = DMatrix::zeros(4, 4);
        for (i, &j) in p.targets().iter().enumerate() {
            pm[(i, j)] = 1.0;
        }
        let m1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(b.mass.clone()));
        let oracle = b.eigenfunctions.transpose() * m1 * pm * &b.eigenfunctions;
        assert!((&c.matrix - oracle).norm() < 1e-12);
        let back = functional_to_pointwise(&c, &b, &b, None).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn identity_fmap_gives_identity_map() {
        let g = normalize_to_unit_area(&shapes::bumpy_grid(4, 4, 2));
        let b = full_basis(&g);
        let n = g.num_vertices();
        let c = FunctionalMap::new(DMatrix::identity(n, n));
        let p = functional_to_pointwise(&c, &b, &b, None).unwrap();
        assert_eq!(p, PointwiseMap::identity(n));
    }

    #[test]
    fn oversized_fmap_rejected() {
        let g = normalize_to_unit_area(&shapes::bumpy_grid(4, 4, 2));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 5).unwrap();
        let c = FunctionalMap::new(DMatrix::identity(6, 5));
        assert!(matches!(
            functional_to_pointwise(&c, &b, &b, None),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn pointwise_validation_and_helpers() {
        assert!(PointwiseMap::new(vec![0, 3], 3).is_err());
        let a = PointwiseMap::new(vec![1, 2, 0], 3).unwrap();
        assert!(a.is_bijection());
        assert_eq!(a.then(&a).targets(), &[2, 0, 1]);
        assert!((a.agreement(&PointwiseMap::identity(3)) - 0.0).abs() < 1e-15);
        assert!(!PointwiseMap::new(vec![0, 0], 2).unwrap().is_bijection());
    }

    #[test]
    fn sampled_projection_recovers_band_limited_function() {
        let g = normalize_to_unit_area(&shapes::bumpy_grid(10, 8, 3));
        let b = compute_basis(&build_laplacian(&g).unwrap(), 10).unwrap();
        let samples: Vec<usize> = (0..g.num_vertices()).step_by(3).collect();
        let dom = SpectralDomain::sampled(&b, &samples);
        let coeffs = nalgebra::DVector::from_fn(6, |i, _| (i as f64 + 1.0).recip());
        let f = dom.phi(6) * &coeffs;
        let got = dom.project(&DMatrix::from_column_slice(f.len(), 1, f.as_slice()), 6).unwrap();
        assert!((got.column(0) - coeffs).norm() < 1e-6);
    }
}
