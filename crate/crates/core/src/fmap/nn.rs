use nalgebra::DMatrix;
use rayon::prelude::*;

const QUERY_BLOCK: usize = 256;

/// For each row of `queries`, the index of the nearest row of `candidates` in Euclidean
/// distance. Ties go to the lowest candidate index.
pub fn nearest_rows(candidates: &DMatrix<f64>, queries: &DMatrix<f64>) -> Vec<usize> {
    assert_eq!(candidates.ncols(), queries.ncols(), "embedding dimensions differ");
    let m = candidates.nrows();
    assert!(m > 0, "no candidates");
    let norms: Vec<f64> = candidates.row_iter().map(|r| r.norm_squared()).collect();
    let ct = candidates.transpose();
    let starts: Vec<usize> = (0..queries.nrows()).step_by(QUERY_BLOCK).collect();
    starts
        .par_iter()
        .flat_map_iter(|&s| {
            let len = QUERY_BLOCK.min(queries.nrows() - s);
            // |c|^2 - 2 q.c ranks candidates like the full squared distance
            let g = queries.rows(s, len) * &ct;
            (0..len)
                .map(|i| {
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for j in 0..m {
                        let d = norms[j] - 2.0 * g[(i, j)];
                        if d < best_d {
                            best_d = d;
                            best = j;
                        }
                    }
                    best
                })
                .collect::<Vec<_>>()
        })
        .collect()
}
