use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `||C C^T - I||_F^2` with the identity sized by the row count.
pub fn energy_ortho(c: &DMatrix<f64>) -> f64 {
    let mut g = c * c.transpose();
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.norm_squared()
}

/// `||C diag(eigs_cols) - diag(eigs_rows) C||_F^2`.
pub fn energy_lap_comm(c: &DMatrix<f64>, eigs_rows: &[f64], eigs_cols: &[f64]) -> Result<f64> {
    if eigs_rows.len() != c.nrows() || eigs_cols.len() != c.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} map with {} row and {} column eigenvalues",
            c.nrows(),
            c.ncols(),
            eigs_rows.len(),
            eigs_cols.len()
        )));
    }
    let mut s = 0.0;
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            s += (c[(i, j)] * (eigs_cols[j] - eigs_rows[i])).powi(2);
        }
    }
    Ok(s)
}

/// `sum_k (1/k) ||C_k C_k^T - I_k||_F^2` over the leading k x k blocks.
pub fn energy_zoomout(c: &DMatrix<f64>) -> Result<f64> {
    if !c.is_square() {
        return Err(Error::NonSquare {
            rows: c.nrows(),
            cols: c.ncols(),
        });
    }
    Ok(leading_block_energy(c, |k| {
        let ck = c.view((0, 0), (k, k));
        let mut g = ck * ck.transpose();
        for i in 0..k {
            g[(i, i)] -= 1.0;
        }
        g
    }))
}

/// Sums `(1/k) ||block(k)||_F^2` for k = 1..n.
pub(crate) fn leading_block_energy(
    c: &DMatrix<f64>,
    block: impl Fn(usize) -> DMatrix<f64>,
) -> f64 {
    (1..=c.nrows()).map(|k| block(k).norm_squared() / k as f64).sum()
}

/// `||A - B||_F`.
pub fn fmap_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a - b).norm())
}

/// Block-diagonal `[[base, 0], [0, block]]`.
pub fn embed_block(base: &DMatrix<f64>, block: &DMatrix<f64>) -> DMatrix<f64> {
    let (r0, c0) = base.shape();
    let (r1, c1) = block.shape();
    let mut out = DMatrix::zeros(r0 + r1, c0 + c1);
    out.view_mut((0, 0), (r0, c0)).copy_from(base);
    out.view_mut((r0, c0), (r1, c1)).copy_from(block);
    out
}

/// Pruning-scale energies: `E_ortho / max(rows, cols)` and
/// `E_lapComm / lambda_max^2`, with `lambda_max` the largest eigenvalue involved.
pub fn normalized_energies(c: &DMatrix<f64>, eigs_rows: &[f64], eigs_cols: &[f64]) -> Result<(f64, f64)> {
    let ortho = energy_ortho(c) / c.nrows().max(c.ncols()) as f64;
    let lap = energy_lap_comm(c, eigs_rows, eigs_cols)?;
    let lmax = eigs_rows
        .iter()
        .chain(eigs_cols)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let lap = if lmax > 0.0 { lap / (lmax * lmax) } else { lap };
    Ok((ortho, lap))
}
