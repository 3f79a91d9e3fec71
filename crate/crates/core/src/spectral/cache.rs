//! Flat binary basis cache: `n`, `k` as u64, then `k` eigenvalues, then the
//! column-major n x k eigenfunction matrix. All little-endian.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{compute_basis, LaplacianPair, SpectralBasis};
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub const CACHE_ENV: &str = "MAPTREE_CACHE_DIR";

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn write_basis(path: &Path, basis: &SpectralBasis) -> Result<()> {
    let (n, k) = basis.eigenfunctions.shape();
    let mut buf = Vec::with_capacity(16 + 8 * k * (n + 1));
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(k as u64).to_le_bytes());
    for l in &basis.eigenvalues {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    // nalgebra storage is column-major already
    for x in basis.eigenfunctions.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Reads a cached basis; `mass` is attached as-is since it is not stored.
pub fn read_basis(path: &Path, mass: Vec<f64>) -> Result<SpectralBasis> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        message: message.to_string(),
    };
    if bytes.len() < 16 {
        return Err(bad("truncated header"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    let n = u64::from_le_bytes(word(0)) as usize;
    let k = u64::from_le_bytes(word(1)) as usize;
    if bytes.len() != 16 + 8 * k * (n + 1) {
        return Err(bad("size does not match header"));
    }
    if n != mass.len() {
        return Err(bad("vertex count does not match mesh"));
    }
    let eigenvalues = (0..k).map(|i| f64::from_le_bytes(word(2 + i))).collect();
    let values: Vec<f64> = (0..n * k).map(|i| f64::from_le_bytes(word(2 + k + i))).collect();
    Ok(SpectralBasis {
        eigenvalues,
        eigenfunctions: DMatrix::from_vec(n, k, values),
        mass,
    })
}

/// Computes a basis, reusing `<dir>/<mesh hash>_k<k>.basis` when a cache directory is set.
pub fn compute_basis_cached(
    mesh: &TriangleMesh,
    laplacian: &LaplacianPair,
    k: usize,
    dir: Option<&Path>,
) -> Result<SpectralBasis> {
    let Some(dir) = dir else {
        return compute_basis(laplacian, k);
    };
    let path = dir.join(format!("{}_k{k}.basis", mesh.content_hash()));
    if path.exists() {
        match read_basis(&path, laplacian.mass.clone()) {
            Ok(b) => return Ok(b),
            Err(e) => log::warn!("ignoring unreadable basis cache {}: {e}", path.display()),
        }
    }
    let basis = compute_basis(laplacian, k)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_basis(&path, &basis)?;
    Ok(basis)
}
