//! Map quality measurements.

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{normalized_energies, pointwise_to_functional, PointwiseMap};
use crate::mesh::GeodesicCache;
use crate::spectral::{LaplacianPair, SpectralBasis};
use crate::TriangleMesh;

/// Image triangles whose doubled area falls below this fraction of their squared
/// longest edge count as degenerate.
const DEGENERATE_RATIO: f64 = 1e-12;

/// Quality measures for one pointwise map. Geodesic quantities are normalized by
/// `sqrt(area)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub accuracy: Option<f64>,
    /// Mean (not sum) over ordered sample pairs.
    pub geodesic_distortion: f64,
    pub dirichlet_energy: f64,
    pub conformal_distortion: f64,
    pub energy_ortho: f64,
    pub energy_lapcomm: f64,
    /// Fraction of faces whose image reverses orientation (sign of the per-face map).
    pub orientation_flip_fraction: f64,
    pub geodesic_samples: usize,
    pub degenerate_faces: usize,
}

fn check_domain(pmap: &PointwiseMap, n: usize, what: &str) -> Result<()> {
    if pmap.domain_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what}: map has {} sources, expected {n}",
            pmap.domain_size()
        )));
    }
    Ok(())
}

/// Mean normalized geodesic distance between `pmap(v)` and `gt(v)` on the target.
pub fn accuracy(pmap: &PointwiseMap, gt: &PointwiseMap, geo: &GeodesicCache) -> Result<f64> {
    check_domain(pmap, gt.domain_size(), "accuracy")?;
    if pmap.domain_size() == 0 {
        return Ok(0.0);
    }
    let total: f64 = pmap
        .targets()
        .iter()
        .zip(gt.targets())
        .map(|(&a, &b)| if a == b { Ok(0.0) } else { geo.require(a, b) })
        .sum::<Result<f64>>()?;
    Ok(total / pmap.domain_size() as f64)
}

/// Mean of `(G1(i, j) - G2(T(i), T(j)))^2` over ordered pairs `i != j` of `samples`.
pub fn geodesic_distortion(
    pmap: &PointwiseMap,
    geo1: &GeodesicCache,
    geo2: &GeodesicCache,
    samples: &[usize],
) -> Result<f64> {
    let m = samples.len();
    if m < 2 {
        return Ok(0.0);
    }
    // per-row sums are collected before adding so the result does not depend on
    // how rayon splits the work
    let rows: Vec<f64> = samples
        .par_iter()
        .map(|&i| -> Result<f64> {
            let row = geo1.row_of(i).ok_or_else(|| {
                Error::MissingDistances(format!("sample {i} is not a source on the first shape"))
            })?;
            let ti = pmap.get(i);
            let mut acc = 0.0;
            for &j in samples {
                if j == i {
                    continue;
                }
                let tj = pmap.get(j);
                let d2 = if ti == tj { 0.0 } else { geo2.require(ti, tj)? };
                acc += (row[j] - d2).powi(2);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum::<f64>() / (m * (m - 1)) as f64)
}

/// `sum_xyz P^T W1 P` where row `v` of `P` is the position of `pmap(v)` on the target.
pub fn dirichlet_energy(
    pmap: &PointwiseMap,
    laplacian1: &LaplacianPair,
    positions2: &[Vector3<f64>],
) -> Result<f64> {
    check_domain(pmap, laplacian1.num_vertices(), "dirichlet_energy")?;
    if pmap.codomain_size() != positions2.len() {
        return Err(Error::DimensionMismatch(format!(
            "map targets {} vertices, got {} positions",
            pmap.codomain_size(),
            positions2.len()
        )));
    }
    let mut total = 0.0;
    for axis in 0..3 {
        let p: Vec<f64> = pmap.targets().iter().map(|&t| positions2[t][axis]).collect();
        total += laplacian1.stiffness.quad_form(&p);
    }
    Ok(total)
}

/// Triangle edges `p1 - p0`, `p2 - p0` written in an orthonormal frame of the
/// triangle's plane whose normal is `normal` (or the triangle's own normal).
fn flatten(p: [Vector3<f64>; 3], normal: Option<Vector3<f64>>) -> Option<Matrix2<f64>> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let n = e1.cross(&e2);
    let scale = e1.norm_squared().max(e2.norm_squared()).max((p[2] - p[1]).norm_squared());
    if scale == 0.0 || n.norm() <= DEGENERATE_RATIO * scale {
        return None;
    }
    let mut n = n.normalize();
    if let Some(r) = normal {
        if n.dot(&r) < 0.0 {
            n = -n;
        }
    }
    let u = e1.normalize();
    let v = n.cross(&u);
    Some(Matrix2::from_columns(&[
        Vector2::new(e1.dot(&u), e1.dot(&v)),
        Vector2::new(e2.dot(&u), e2.dot(&v)),
    ]))
}

/// Per-face linear map `A = T S^-1` between flattened source and image triangles.
/// The image frame is oriented by the averaged target vertex normals, so `det A < 0`
/// marks a flipped face. `None` for degenerate triangles.
fn face_maps(pmap: &PointwiseMap, mesh1: &TriangleMesh, mesh2: &TriangleMesh) -> Result<Vec<Option<Matrix2<f64>>>> {
    check_domain(pmap, mesh1.num_vertices(), "face map")?;
    if pmap.codomain_size() != mesh2.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "map targets {} vertices, target mesh has {}",
            pmap.codomain_size(),
            mesh2.num_vertices()
        )));
    }
    let normals2 = mesh2.vertex_normals();
    let pos1 = mesh1.positions();
    let pos2 = mesh2.positions();
    Ok(mesh1
        .faces()
        .par_iter()
        .map(|f| {
            let src = flatten([pos1[f[0]], pos1[f[1]], pos1[f[2]]], None)?;
            let t = [pmap.get(f[0]), pmap.get(f[1]), pmap.get(f[2])];
            let reference = normals2[t[0]] + normals2[t[1]] + normals2[t[2]];
            let img = flatten([pos2[t[0]], pos2[t[1]], pos2[t[2]]], Some(reference))?;
            Some(img * src.try_inverse()?)
        })
        .collect())
}

/// Mean of `s1/s2 + s2/s1 - 2` over faces, plus the number of skipped degenerate faces.
pub fn conformal_distortion_counted(
    pmap: &PointwiseMap,
    mesh1: &TriangleMesh,
    mesh2: &TriangleMesh,
) -> Result<(f64, usize)> {
    let maps = face_maps(pmap, mesh1, mesh2)?;
    let values: Vec<f64> = maps
        .iter()
        .flatten()
        .filter_map(|a| {
            let sv = a.singular_values();
            let (s1, s2) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
            (s2 > 0.0).then(|| s1 / s2 + s2 / s1 - 2.0)
        })
        .collect();
    if values.is_empty() {
        return Err(Error::AllFacesDegenerate);
    }
    let skipped = maps.len() - values.len();
    Ok((values.iter().sum::<f64>() / values.len() as f64, skipped))
}

pub fn conformal_distortion(pmap: &PointwiseMap, mesh1: &TriangleMesh, mesh2: &TriangleMesh) -> Result<f64> {
    conformal_distortion_counted(pmap, mesh1, mesh2).map(|(v, _)| v)
}

/// Fraction of non-degenerate faces whose image has reversed orientation.
pub fn orientation_flip_fraction(pmap: &PointwiseMap, mesh1: &TriangleMesh, mesh2: &TriangleMesh) -> Result<f64> {
    let maps = face_maps(pmap, mesh1, mesh2)?;
    let dets: Vec<f64> = maps.iter().flatten().map(|a| a.determinant()).collect();
    if dets.is_empty() {
        return Err(Error::AllFacesDegenerate);
    }
    Ok(dets.iter().filter(|&&d| d < 0.0).count() as f64 / dets.len() as f64)
}

/// Everything needed to score maps from shape 1 to shape 2.
#[derive(Debug, Clone, Copy)]
pub struct PairContext<'a> {
    pub mesh1: &'a TriangleMesh,
    pub mesh2: &'a TriangleMesh,
    pub laplacian1: &'a LaplacianPair,
    pub basis1: &'a SpectralBasis,
    pub basis2: &'a SpectralBasis,
    pub geo1: &'a GeodesicCache,
    pub geo2: &'a GeodesicCache,
    /// Sources of `geo1` used for geodesic distortion.
    pub samples: &'a [usize],
    /// Functional map size used for the energies.
    pub k: usize,
}

/// Full report for a dense map `S1 -> S2`. Accuracy needs `geo2` to cover the ground
/// truth targets.
pub fn quality_report(pmap: &PointwiseMap, ctx: &PairContext<'_>, gt: Option<&PointwiseMap>) -> Result<QualityReport> {
    let accuracy = gt.map(|g| accuracy(pmap, g, ctx.geo2)).transpose()?;
    let k1 = ctx.k.min(ctx.basis1.k());
    let k2 = ctx.k.min(ctx.basis2.k());
    let c = pointwise_to_functional(pmap, ctx.basis1, ctx.basis2, k1, k2)?;
    let (energy_ortho, energy_lapcomm) =
        normalized_energies(&c.matrix, &ctx.basis1.eigenvalues[..k1], &ctx.basis2.eigenvalues[..k2])?;
    let (conformal, degenerate_faces) = conformal_distortion_counted(pmap, ctx.mesh1, ctx.mesh2)?;
    Ok(QualityReport {
        accuracy,
        geodesic_distortion: geodesic_distortion(pmap, ctx.geo1, ctx.geo2, ctx.samples)?,
        dirichlet_energy: dirichlet_energy(pmap, ctx.laplacian1, ctx.mesh2.positions())?,
        conformal_distortion: conformal,
        energy_ortho,
        energy_lapcomm,
        orientation_flip_fraction: orientation_flip_fraction(pmap, ctx.mesh1, ctx.mesh2)?,
        geodesic_samples: ctx.samples.len(),
        degenerate_faces,
    })
}
