//! Triangle meshes: validation, basic geometry, graph geodesics, sampling and
//! connected-component splitting.

mod components;
mod geodesic;
pub mod io;
mod sampling;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use components::{connected_components, ComponentSplit};
pub use geodesic::{geodesic_distances, GeodesicCache};
pub use io::{load_mesh, MeshFormat};
pub use sampling::{default_seed_vertex, farthest_point_sample};

/// Faces with area below this fraction of the mean face area are rejected.
pub const DEGENERATE_FACE_RATIO: f64 = 1e-12;

/// An edge-manifold triangle mesh with cached adjacency.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    positions: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    total_area: f64,
    /// Sorted neighbor lists.
    neighbors: Vec<Vec<usize>>,
}

impl TriangleMesh {
    /// Builds and validates a mesh.
    ///
    /// Rejects out-of-range indices, repeated indices within a face, edges shared by
    /// more than two faces and faces whose area is negligible against the mean.
    pub fn new(positions: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = positions.len();
        if n == 0 || faces.is_empty() {
            return Err(Error::Validation("mesh has no vertices or no faces".into()));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::Validation(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(Error::Validation(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Validation(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }

        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::with_capacity(faces.len() * 2);
        for (fi, f) in faces.iter().enumerate() {
            for e in 0..3 {
                let key = ordered(f[e], f[(e + 1) % 3]);
                let c = edge_count.entry(key).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(Error::Validation(format!(
                        "non-manifold edge ({}, {}) shared by more than two faces (face {fi})",
                        key.0, key.1
                    )));
                }
            }
        }

        let areas: Vec<f64> = faces.iter().map(|f| triangle_area(&positions, f)).collect();
        let total_area: f64 = areas.iter().sum();
        if total_area <= 0.0 || !total_area.is_finite() {
            return Err(Error::Validation(format!("total area {total_area} is not positive")));
        }
        let mean = total_area / faces.len() as f64;
        for (fi, a) in areas.iter().enumerate() {
            if *a < DEGENERATE_FACE_RATIO * mean {
                return Err(Error::Validation(format!(
                    "face {fi} is degenerate (area {a:e}, mean face area {mean:e})"
                )));
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edge_count.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        Ok(TriangleMesh {
            positions,
            faces,
            total_area,
            neighbors,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Sorted one-ring of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        triangle_area(&self.positions, &self.faces[f])
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        (self.positions[a] - self.positions[b]).norm()
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Barycentric lumped areas: one third of the incident face areas.
    pub fn lumped_areas(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_vertices()];
        for f in &self.faces {
            let a = triangle_area(&self.positions, f) / 3.0;
            for &v in f {
                m[v] += a;
            }
        }
        m
    }

    /// Unnormalized face normal (twice the area, oriented by winding).
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let p = &self.positions;
        (p[b] - p[a]).cross(&(p[c] - p[a]))
    }

    /// Area-weighted unit vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.num_vertices()];
        for (fi, f) in self.faces.iter().enumerate() {
            let n = self.face_normal(fi);
            for &v in f {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Copy with every position scaled by `s`.
    pub fn scaled(&self, s: f64) -> TriangleMesh {
        TriangleMesh {
            positions: self.positions.iter().map(|p| p * s).collect(),
            faces: self.faces.clone(),
            total_area: self.total_area * s * s,
            neighbors: self.neighbors.clone(),
        }
    }

    /// Copy with positions replaced; connectivity is kept and re-validated.
    pub fn with_positions(&self, positions: Vec<Vector3<f64>>) -> Result<TriangleMesh> {
        if positions.len() != self.num_vertices() {
            return Err(Error::Validation(format!(
                "expected {} positions, got {}",
                self.num_vertices(),
                positions.len()
            )));
        }
        TriangleMesh::new(positions, self.faces.clone())
    }

    /// Relabels vertices: new vertex `i` is old vertex `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<TriangleMesh> {
        let n = self.num_vertices();
        if order.len() != n {
            return Err(Error::Validation("permutation length differs from vertex count".into()));
        }
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::Validation("order is not a permutation".into()));
            }
            inverse[old] = new;
        }
        let positions = order.iter().map(|&old| self.positions[old]).collect();
        let faces = self
            .faces
            .iter()
            .map(|f| [inverse[f[0]], inverse[f[1]], inverse[f[2]]])
            .collect();
        TriangleMesh::new(positions, faces)
    }

    /// Content hash over positions and faces, used to key the spectral cache.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.num_vertices() as u64).to_le_bytes());
        h.update((self.num_faces() as u64).to_le_bytes());
        for p in &self.positions {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for &v in f {
                h.update((v as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Uniformly rescales the mesh so its total area is one.
pub fn normalize_to_unit_area(mesh: &TriangleMesh) -> TriangleMesh {
    let s = 1.0 / mesh.total_area().sqrt();
    let mut out = mesh.scaled(s);
    // recompute rather than trust s^2 * area so repeated normalization is a fixed point
    out.total_area = out
        .faces
        .iter()
        .map(|f| triangle_area(&out.positions, f))
        .sum();
    out
}

pub(crate) fn triangle_area(p: &[Vector3<f64>], f: &[usize; 3]) -> f64 {
    0.5 * (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]])).norm()
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}
