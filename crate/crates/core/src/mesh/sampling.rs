use super::geodesic::dijkstra;
use super::TriangleMesh;
use crate::error::{Error, Result};

/// Vertex with the largest lumped area (lowest index on ties).
pub fn default_seed_vertex(mesh: &TriangleMesh) -> usize {
    let areas = mesh.lumped_areas();
    let mut best = 0;
    for (i, &a) in areas.iter().enumerate() {
        if a > areas[best] {
            best = i;
        }
    }
    best
}

/// Greedy farthest-point sampling under edge-graph geodesics, starting at `seed_vertex`.
///
/// Each new sample is the vertex maximizing its distance to the current set; ties go to
/// the lowest index. Vertices unreachable from the set count as infinitely far.
pub fn farthest_point_sample(
    mesh: &TriangleMesh,
    count: usize,
    seed_vertex: usize,
) -> Result<Vec<usize>> {
    let n = mesh.num_vertices();
    if count > n {
        return Err(Error::CountTooLarge {
            requested: count,
            available: n,
        });
    }
    if seed_vertex >= n {
        return Err(Error::Validation(format!("seed vertex {seed_vertex} out of range")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut samples = Vec::with_capacity(count);
    let mut chosen = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut next = seed_vertex;
    while samples.len() < count {
        samples.push(next);
        chosen[next] = true;
        if samples.len() == count {
            break;
        }
        let d = dijkstra(mesh, next);
        for (m, x) in min_dist.iter_mut().zip(&d) {
            if *x < *m {
                *m = *x;
            }
        }
        let mut best: Option<usize> = None;
        for v in 0..n {
            if chosen[v] {
                continue;
            }
            match best {
                None => best = Some(v),
                Some(b) if min_dist[v] > min_dist[b] => best = Some(v),
                _ => {}
            }
        }
        next = best.expect("count <= n leaves an unchosen vertex");
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn exhaustive_sampling_is_a_permutation() {
        let m = shapes::grid(4, 3, 1.0, 1.0, shapes::Diagonal::Alternating);
        let mut s = farthest_point_sample(&m, m.num_vertices(), 0).unwrap();
        s.sort_unstable();
        assert_eq!(s, (0..m.num_vertices()).collect::<Vec<_>>());
    }

    #[test]
    fn single_sample_is_seed() {
        let m = shapes::grid(4, 3, 1.0, 1.0, shapes::Diagonal::Alternating);
        assert_eq!(farthest_point_sample(&m, 1, 7).unwrap(), vec![7]);
    }

    #[test]
    fn second_sample_is_farthest_end_of_strip() {
        // one-cell-high strip: the farthest vertex from corner 0 is at the far end
        let m = shapes::grid(10, 1, 10.0, 1.0, shapes::Diagonal::Uniform);
        let s = farthest_point_sample(&m, 2, 0).unwrap();
        let d = crate::mesh::geodesic_distances(&m, &[0]).unwrap();
        let far = (0..m.num_vertices())
            .max_by(|&a, &b| d.row(0)[a].total_cmp(&d.row(0)[b]).then(b.cmp(&a)))
            .unwrap();
        assert_eq!(s[1], far);
        assert!(m.positions()[s[1]].x > 9.99);
    }

    #[test]
    fn too_many_samples() {
        let m = shapes::tetrahedron();
        assert!(matches!(
            farthest_point_sample(&m, 5, 0),
            Err(Error::CountTooLarge { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let m = shapes::bumpy_grid(10, 8, 0);
        let seed = default_seed_vertex(&m);
        assert_eq!(
            farthest_point_sample(&m, 20, seed).unwrap(),
            farthest_point_sample(&m, 20, seed).unwrap()
        );
    }
}
