use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Edge-graph shortest-path distances from a set of source vertices, divided by
/// `sqrt(total_area)` so they are invariant under uniform scaling.
#[derive(Debug, Clone)]
pub struct GeodesicCache {
    sample_indices: Vec<usize>,
    /// Row `i` holds distances from `sample_indices[i]` to every vertex.
    distances: Vec<Vec<f64>>,
    /// Row of each vertex in `distances`, if it is a source.
    source_row: Vec<Option<usize>>,
}

impl GeodesicCache {
    pub fn sample_indices(&self) -> &[usize] {
        &self.sample_indices
    }

    pub fn num_vertices(&self) -> usize {
        self.source_row.len()
    }

    /// Distances from the `i`-th source to every vertex.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.distances[i]
    }

    /// Distance row for a vertex that is a source.
    pub fn row_of(&self, v: usize) -> Option<&[f64]> {
        self.source_row
            .get(v)
            .copied()
            .flatten()
            .map(|r| self.distances[r].as_slice())
    }

    pub fn is_source(&self, v: usize) -> bool {
        matches!(self.source_row.get(v), Some(Some(_)))
    }

    /// Normalized distance between two vertices, available when either one is a source.
    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        if let Some(r) = self.row_of(a) {
            return r.get(b).copied();
        }
        self.row_of(b).and_then(|r| r.get(a).copied())
    }

    pub(crate) fn require(&self, a: usize, b: usize) -> Result<f64> {
        self.distance(a, b).ok_or_else(|| {
            Error::MissingDistances(format!("neither vertex {a} nor {b} is a geodesic source"))
        })
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on vertex index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Raw (unnormalized) single-source Dijkstra on the edge graph.
pub(crate) fn dijkstra(mesh: &TriangleMesh, source: usize) -> Vec<f64> {
    let n = mesh.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in mesh.neighbors(u) {
            let nd = d + mesh.edge_length(u, v);
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, vertex: v });
            }
        }
    }
    dist
}

/// Dijkstra from every source; unreachable vertices get `+inf`.
pub fn geodesic_distances(mesh: &TriangleMesh, sources: &[usize]) -> Result<GeodesicCache> {
    if sources.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let n = mesh.num_vertices();
    if let Some(&bad) = sources.iter().find(|&&s| s >= n) {
        return Err(Error::Validation(format!("geodesic source {bad} out of range")));
    }
    let mut unique = Vec::with_capacity(sources.len());
    let mut source_row = vec![None; n];
    for &s in sources {
        if source_row[s].is_none() {
            source_row[s] = Some(unique.len());
            unique.push(s);
        }
    }
    let scale = 1.0 / mesh.total_area().sqrt();
    let distances: Vec<Vec<f64>> = unique
        .par_iter()
        .map(|&s| {
            let mut d = dijkstra(mesh, s);
            d.iter_mut().for_each(|x| *x *= scale);
            d
        })
        .collect();
    Ok(GeodesicCache {
        sample_indices: unique,
        distances,
        source_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use nalgebra::Vector3;

    /// Thin strip whose bottom row is the path 0-1-2 on the x axis.
    fn strip() -> TriangleMesh {
        let p = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(0.5, 10.0, 0.0),
            Vector3::new(1.5, 10.0, 0.0),
        ];
        TriangleMesh::new(p, vec![[0, 1, 3], [1, 4, 3], [1, 2, 4]]).unwrap()
    }

    #[test]
    fn line_distances() {
        let m = strip();
        let g = geodesic_distances(&m, &[0]).unwrap();
        let s = m.total_area().sqrt();
        assert!(g.row(0)[0].abs() < 1e-15);
        assert!((g.row(0)[1] * s - 1.0).abs() < 1e-12);
        assert!((g.row(0)[2] * s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_all_pairs_match_edge_lengths() {
        let m = shapes::tetrahedron();
        let all: Vec<usize> = (0..4).collect();
        let g = geodesic_distances(&m, &all).unwrap();
        let s = m.total_area().sqrt();
        for a in 0..4 {
            for b in 0..4 {
                // every pair of tetrahedron vertices is joined by an edge
                let expected = if a == b { 0.0 } else { m.edge_length(a, b) / s };
                assert!((g.distance(a, b).unwrap() - expected).abs() < 1e-12);
                assert!((g.distance(a, b).unwrap() - g.distance(b, a).unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disconnected_component_is_infinite() {
        let p = vec![
            Vector3::zeros(),
            Vector3::x(),
            Vector3::y(),
            Vector3::new(5.0, 0.0, 0.0),
            Vector3::new(6.0, 0.0, 0.0),
            Vector3::new(5.0, 1.0, 0.0),
        ];
        let m = TriangleMesh::new(p, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let g = geodesic_distances(&m, &[0]).unwrap();
        assert!(g.row(0)[4].is_infinite());
        assert!(g.row(0)[2].is_finite());
    }

    #[test]
    fn empty_sources_rejected() {
        assert!(matches!(
            geodesic_distances(&shapes::tetrahedron(), &[]),
            Err(Error::EmptySourceSet)
        ));
    }

    #[test]
    fn scale_invariance_and_metric_axioms() {
        let m = shapes::bumpy_grid(8, 6, 0);
        let big = m.scaled(3.7);
        let src = [0, 5, 17, 33];
        let a = geodesic_distances(&m, &src).unwrap();
        let b = geodesic_distances(&big, &src).unwrap();
        for i in 0..src.len() {
            for v in 0..m.num_vertices() {
                let (x, y) = (a.row(i)[v], b.row(i)[v]);
                assert!((x - y).abs() <= 1e-9 * x.max(1e-12));
            }
        }
        for &i in &src {
            assert_eq!(a.distance(i, i), Some(0.0));
            for &j in &src {
                for &k in &src {
                    let (ij, jk, ik) = (
                        a.distance(i, j).unwrap(),
                        a.distance(j, k).unwrap(),
                        a.distance(i, k).unwrap(),
                    );
                    assert!(ik <= (ij + jk) * (1.0 + 1e-9));
                }
                let d = (a.distance(i, j).unwrap() - a.distance(j, i).unwrap()).abs();
                assert!(d <= 1e-9 * a.distance(i, j).unwrap().max(1e-12));
            }
        }
    }
}
