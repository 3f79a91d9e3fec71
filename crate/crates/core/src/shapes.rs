//! Procedural meshes used by the examples, tests and benchmarks.
//!
//! All generators are deterministic. Grids index vertex `(i, j)` as `i + j * (nx + 1)`.

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::TriangleMesh;

/// How grid cells are split into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    /// Every cell split along the same diagonal.
    Uniform,
    /// Diagonal direction alternates in a checkerboard; with an even number of cells per
    /// side the triangulation keeps every symmetry of the rectangle.
    Alternating,
}

/// Planar `nx` x `ny` cell grid spanning `[0, width] x [0, height]`.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64, diagonal: Diagonal) -> TriangleMesh {
    grid_with_height(nx, ny, width, height, diagonal, |_, _| 0.0)
}

/// Grid whose vertices are lifted by `z = f(x, y)`.
pub fn grid_with_height(
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    diagonal: Diagonal,
    f: impl Fn(f64, f64) -> f64,
) -> TriangleMesh {
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = width * i as f64 / nx as f64;
            let y = height * j as f64 / ny as f64;
            positions.push(Vector3::new(x, y, f(x, y)));
        }
    }
    TriangleMesh::new(positions, grid_faces(nx, ny, diagonal)).expect("grid is a valid mesh")
}

pub fn grid_faces(nx: usize, ny: usize, diagonal: Diagonal) -> Vec<[usize; 3]> {
    let idx = |i: usize, j: usize| i + j * (nx + 1);
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            let slash = match diagonal {
                Diagonal::Uniform => true,
                Diagonal::Alternating => (i + j) % 2 == 0,
            };
            if slash {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    faces
}

/// Symmetries of an index grid, as vertex maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSymmetry {
    Identity,
    MirrorX,
    MirrorY,
    Rotate180,
    /// Transpose `(i, j) -> (j, i)`; square grids only.
    Transpose,
    /// Anti-transpose `(i, j) -> (n - j, n - i)`; square grids only.
    AntiTranspose,
    /// Quarter turn `(i, j) -> (n - j, i)`; square grids only.
    Rotate90,
    /// Three-quarter turn `(i, j) -> (j, n - i)`; square grids only.
    Rotate270,
}

impl GridSymmetry {
    pub const KLEIN: [GridSymmetry; 4] = [
        GridSymmetry::Identity,
        GridSymmetry::MirrorX,
        GridSymmetry::MirrorY,
        GridSymmetry::Rotate180,
    ];
    pub const DIHEDRAL4: [GridSymmetry; 8] = [
        GridSymmetry::Identity,
        GridSymmetry::MirrorX,
        GridSymmetry::MirrorY,
        GridSymmetry::Rotate180,
        GridSymmetry::Transpose,
        GridSymmetry::AntiTranspose,
        GridSymmetry::Rotate90,
        GridSymmetry::Rotate270,
    ];
}

/// Vertex map `v -> sym(v)` on an `nx` x `ny` grid.
pub fn grid_symmetry(nx: usize, ny: usize, sym: GridSymmetry) -> Vec<usize> {
    let idx = |i: usize, j: usize| i + j * (nx + 1);
    let square = nx == ny;
    let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let (a, b) = match sym {
                GridSymmetry::Identity => (i, j),
                GridSymmetry::MirrorX => (nx - i, j),
                GridSymmetry::MirrorY => (i, ny - j),
                GridSymmetry::Rotate180 => (nx - i, ny - j),
                GridSymmetry::Transpose if square => (j, i),
                GridSymmetry::AntiTranspose if square => (nx - j, nx - i),
                GridSymmetry::Rotate90 if square => (nx - j, i),
                GridSymmetry::Rotate270 if square => (j, nx - i),
                _ => panic!("{sym:?} requires a square grid"),
            };
            out.push(idx(a, b));
        }
    }
    out
}

/// Unit-area rectangle grid with alternating diagonals and aspect ratio `aspect`
/// (width / height). `nx` and `ny` should be even for the full symmetry group.
pub fn rectangle(nx: usize, ny: usize, aspect: f64) -> TriangleMesh {
    let w = aspect.sqrt();
    grid(nx, ny, w, 1.0 / w, Diagonal::Alternating)
}

/// Smooth pseudo-random bump field over the unit square; no symmetry for seed-driven centers.
fn bump_field(seed: u64, count: usize) -> Vec<(f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.06..0.12),
                rng.gen_range(0.04..0.09),
            )
        })
        .collect()
}

fn eval_bumps(bumps: &[(f64, f64, f64, f64)], u: f64, v: f64) -> f64 {
    bumps
        .iter()
        .map(|&(cx, cy, h, s)| h * (-((u - cx).powi(2) + (v - cy).powi(2)) / (2.0 * s * s)).exp())
        .sum()
}

/// Grid over `[0, 1.22] x [0, 1]` with asymmetric bumps; intrinsically asymmetric.
pub fn bumpy_grid(nx: usize, ny: usize, seed: u64) -> TriangleMesh {
    let bumps = bump_field(seed ^ 0x5eed, 4);
    let w = 1.22;
    grid_with_height(nx, ny, w, 1.0, Diagonal::Alternating, |x, y| {
        eval_bumps(&bumps, x / w, y)
    })
}

/// Bumpy grid warped onto a generic quadrilateral. Neither the outline nor the bumps
/// have any symmetry, so the identity is the only self-isometry.
pub fn irregular_patch(nx: usize, ny: usize, seed: u64) -> TriangleMesh {
    let bumps = bump_field(seed ^ 0x5eed, 4);
    let corners = [(0.0, 0.0), (1.6, 0.0), (0.9, 1.1), (0.1, 0.6)];
    let g = grid_with_height(nx, ny, 1.0, 1.0, Diagonal::Alternating, |u, v| eval_bumps(&bumps, u, v));
    let positions = g
        .positions()
        .iter()
        .map(|p| {
            let (u, v) = (p.x, p.y);
            let w = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
            let x: f64 = w.iter().zip(&corners).map(|(w, c)| w * c.0).sum();
            let y: f64 = w.iter().zip(&corners).map(|(w, c)| w * c.1).sum();
            Vector3::new(x, y, p.z)
        })
        .collect();
    g.with_positions(positions).expect("bilinear warp keeps faces valid")
}

/// Flat trapezoid over `y in [0, 1]` whose width grows linearly with `y` (1.22 on
/// average, scaled by `1 + taper * (y - 1/2)`). Its only nontrivial isometry is the
/// left-right reflection, given by [`GridSymmetry::MirrorX`] on the vertex indices.
pub fn trapezoid(nx: usize, ny: usize, taper: f64) -> TriangleMesh {
    let w = 1.22;
    let g = grid(nx, ny, w, 1.0, Diagonal::Alternating);
    let positions = g
        .positions()
        .iter()
        .map(|p| Vector3::new(w / 2.0 + (p.x - w / 2.0) * (1.0 + taper * (p.y - 0.5)), p.y, 0.0))
        .collect();
    g.with_positions(positions).expect("tapering keeps faces valid")
}

/// Bends a surface lying roughly in the xy-plane around an axis parallel to x,
/// wrapping the y coordinate onto a cylinder of the given radius. Heights are carried
/// along the cylinder normal, so the result is near-isometric to the input.
pub fn bend_y(mesh: &TriangleMesh, radius: f64) -> TriangleMesh {
    let positions = mesh
        .positions()
        .iter()
        .map(|p| {
            let t = p.y / radius;
            let normal = Vector3::new(0.0, -t.sin(), t.cos());
            Vector3::new(p.x, radius * t.sin(), radius * (1.0 - t.cos())) + normal * p.z
        })
        .collect();
    mesh.with_positions(positions).expect("bending keeps faces valid")
}

/// Rigid motion `R p + t`.
pub fn rigid_motion(mesh: &TriangleMesh, axis_angle: Vector3<f64>, t: Vector3<f64>) -> TriangleMesh {
    let r = Rotation3::new(axis_angle);
    let positions = mesh.positions().iter().map(|p| r * p + t).collect();
    mesh.with_positions(positions).expect("rigid motion keeps faces valid")
}

/// Regular tetrahedron with edge length `sqrt(2)`.
pub fn tetrahedron() -> TriangleMesh {
    let p = vec![
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ]
    .into_iter()
    .map(|v| v * 0.5)
    .collect();
    TriangleMesh::new(p, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).expect("valid")
}

/// Surface of the unit cube, two triangles per side.
pub fn unit_cube() -> TriangleMesh {
    let mut p = Vec::new();
    for k in 0..8 {
        p.push(Vector3::new(
            (k & 1) as f64,
            ((k >> 1) & 1) as f64,
            ((k >> 2) & 1) as f64,
        ));
    }
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(p, faces).expect("valid")
}

/// Closed torus with `nu` x `nv` vertices and a small seeded jitter that breaks symmetry.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64, jitter: f64, seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let u = std::f64::consts::TAU * i as f64 / nu as f64;
            let v = std::f64::consts::TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            let base = Vector3::new(r * u.cos(), r * u.sin(), minor * v.sin());
            let d = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            p.push(base + d * jitter);
        }
    }
    let idx = |i: usize, j: usize| (i % nu) + (j % nv) * nu;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(p, faces).expect("valid torus")
}

/// Several disjoint tabletop grids of different resolutions merged into one mesh.
/// Returns the scene and the vertex count of each piece in order.
pub fn table_scene(count: usize) -> (TriangleMesh, Vec<usize>) {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut sizes = Vec::new();
    for t in 0..count {
        let (nx, ny) = (4 + 2 * t, 2 + 2 * t);
        let top = grid(nx, ny, 1.2, 0.8, Diagonal::Alternating);
        let offset = positions.len();
        let shift = Vector3::new(2.0 * t as f64, 0.0, 0.0);
        positions.extend(top.positions().iter().map(|p| p + shift));
        faces.extend(
            top.faces()
                .iter()
                .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
        );
        sizes.push(top.num_vertices());
    }
    (TriangleMesh::new(positions, faces).expect("valid scene"), sizes)
}

/// Deterministic random permutation of `0..n`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng);
    p
}

/// Inverse of a permutation.
pub fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = grid(4, 4, 1.0, 1.0, Diagonal::Uniform);
        assert_eq!(g.num_vertices(), 25);
        assert_eq!(g.num_faces(), 32);
        assert!((g.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetries_map_faces_to_faces() {
        let (nx, ny) = (6, 4);
        let g = grid(nx, ny, 1.5, 1.0, Diagonal::Alternating);
        let face_set: std::collections::HashSet<[usize; 3]> = g
            .faces()
            .iter()
            .map(|f| {
                let mut s = *f;
                s.sort_unstable();
                s
            })
            .collect();
        for sym in GridSymmetry::KLEIN {
            let m = grid_symmetry(nx, ny, sym);
            for f in g.faces() {
                let mut img = [m[f[0]], m[f[1]], m[f[2]]];
                img.sort_unstable();
                assert!(face_set.contains(&img), "{sym:?}");
            }
        }
    }

    #[test]
    fn bent_copy_is_near_isometric() {
        let g = trapezoid(20, 16, 0.4);
        let b = bend_y(&g, 0.8);
        let mut worst: f64 = 0.0;
        for (a, c) in g.edges() {
            let r = b.edge_length(a, c) / g.edge_length(a, c);
            worst = worst.max((r - 1.0).abs());
        }
        assert!(worst < 0.02, "edge-length perturbation {worst}");
    }
}
