//! Generalized symmetric eigensolvers for `W phi = lambda M phi` with diagonal `M`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{CsrMatrix, EnvelopeCholesky};
use super::LaplacianPair;
use crate::error::{Error, Result};

/// Meshes up to this many vertices are solved densely.
pub const DENSE_LIMIT: usize = 600;

const SHIFT: f64 = -1e-8;
const BLOCK: usize = 4;

/// Dense solve through the symmetric matrix `M^-1/2 W M^-1/2`.
pub fn solve_dense(lap: &LaplacianPair, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = lap.num_vertices();
    let inv_sqrt: Vec<f64> = lap.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = lap.stiffness.to_dense();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = SymmetricEigen::try_new(a, 1e-14, 10_000)
        .ok_or_else(|| Error::SolverNoConvergence("dense symmetric eigensolver".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut phi = DMatrix::zeros(n, k);
    let mut lambda = Vec::with_capacity(k);
    for (c, &src) in order.iter().take(k).enumerate() {
        for v in 0..n {
            phi[(v, c)] = eig.eigenvectors[(v, src)] * inv_sqrt[v];
        }
        let col = phi.column(c);
        let norm2: f64 = col.iter().zip(&lap.mass).map(|(x, m)| x * x * m).sum();
        let col = col / norm2.sqrt();
        lambda.push(lap.stiffness.quad_form(col.as_slice()));
        phi.set_column(c, &col);
    }
    Ok((lambda, phi))
}

fn m_dot(a: &[f64], b: &[f64], mass: &[f64]) -> f64 {
    a.iter().zip(b).zip(mass).map(|((x, y), m)| x * y * m).sum()
}

/// Projects `v` off `basis` in the M inner product (twice) and normalizes it.
/// Returns false when nothing independent is left.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>], mass: &[f64]) -> bool {
    let before = m_dot(v, v, mass).sqrt();
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for q in basis {
            let c = m_dot(q, v, mass);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
    let after = m_dot(v, v, mass).sqrt();
    if after < 1e-10 * before {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= after);
    true
}

/// Block Krylov iteration on the shift-inverted operator with Rayleigh-Ritz extraction
/// on the full stiffness matrix. Converged when every relative residual is below `tol`.
pub fn solve_krylov(lap: &LaplacianPair, k: usize, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = lap.num_vertices();
    let w = &lap.stiffness;
    let mass = &lap.mass;
    let chol = EnvelopeCholesky::factor(w, mass, -SHIFT)?;
    let cap = n.min((8 * k).max(k + 200));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    // The shift-inverted operator blows up the null space by ~1e8, which would swamp the
    // start block and leave ~1e-8 noise in every later direction. Seeding the subspace
    // with the exact null vectors (component indicators) keeps the iteration clean.
    let mut pending = component_indicators(w);
    pending.extend((0..BLOCK.min(n)).map(|_| random(&mut rng)));
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut wq: Vec<Vec<f64>> = Vec::new();
    // lower triangle of Q^T W Q
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut last_rr = 0;
    let mut worst = f64::INFINITY;

    loop {
        let mut added = Vec::new();
        for mut v in pending.drain(..) {
            if q.len() == cap {
                break;
            }
            if !orthonormalize(&mut v, &q, mass) {
                v = random(&mut rng);
                if !orthonormalize(&mut v, &q, mass) {
                    continue;
                }
            }
            let mut wv = vec![0.0; n];
            w.mul_vec(&v, &mut wv);
            let mut row: Vec<f64> = q
                .iter()
                .map(|qj| qj.iter().zip(&wv).map(|(a, b)| a * b).sum())
                .collect();
            row.push(v.iter().zip(&wv).map(|(a, b)| a * b).sum());
            h.push(row);
            added.push(q.len());
            q.push(v);
            wq.push(wv);
        }
        let m = q.len();
        let stalled = added.is_empty() || m == cap;
        if m >= k && (m >= last_rr + (2 * BLOCK).max(m / 8) || stalled) {
            last_rr = m;
            let mut hm = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..=i {
                    hm[(i, j)] = h[i][j];
                    hm[(j, i)] = h[i][j];
                }
            }
            let eig = SymmetricEigen::new(hm);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let mut phi = DMatrix::zeros(n, k);
            let mut lambda = Vec::with_capacity(k);
            worst = 0.0f64;
            for (c, &src) in order.iter().take(k).enumerate() {
                let y = eig.eigenvectors.column(src);
                let theta = eig.eigenvalues[src];
                let mut x = vec![0.0; n];
                let mut wx = vec![0.0; n];
                for j in 0..m {
                    let yj = y[j];
                    for v in 0..n {
                        x[v] += yj * q[j][v];
                        wx[v] += yj * wq[j][v];
                    }
                }
                let mut r2 = 0.0;
                let mut m2 = 0.0;
                for v in 0..n {
                    let mx = mass[v] * x[v];
                    r2 += (wx[v] - theta * mx).powi(2);
                    m2 += mx * mx;
                }
                worst = worst.max((r2 / m2).sqrt());
                lambda.push(theta);
                phi.set_column(c, &nalgebra::DVector::from_vec(x));
            }
            log::debug!("krylov: subspace {m}, worst residual {worst:e}");
            if worst < tol || m == n {
                return Ok((lambda, phi));
            }
        }
        if stalled {
            return Err(Error::SolverNoConvergence(format!(
                "subspace of size {m} left a residual of {worst:e}"
            )));
        }
        pending = added
            .iter()
            .map(|&i| {
                let mut x: Vec<f64> = q[i].iter().zip(mass).map(|(a, b)| a * b).collect();
                chol.solve_in_place(&mut x);
                x
            })
            .collect();
    }
}

fn component_indicators(w: &CsrMatrix) -> Vec<Vec<f64>> {
    let n = w.n();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut ind = vec![0.0; n];
        let mut stack = vec![start];
        label[start] = id;
        while let Some(u) = stack.pop() {
            ind[u] = 1.0;
            for (v, _) in w.row(u) {
                if label[v] == usize::MAX {
                    label[v] = id;
                    stack.push(v);
                }
            }
        }
        out.push(ind);
    }
    out
}
