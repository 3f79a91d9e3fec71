use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// All `rows x cols` matrices over {0, +1, -1} whose columns each hold exactly one
/// nonzero and whose rows hold at most one.
///
/// When `rows < cols` no such matrix exists; the transposes of the `cols x rows`
/// enumeration are returned instead (every row used once, some columns empty).
/// Order is deterministic: column assignments in lexicographic order, then signs with
/// `+1` before `-1` counting from the first column.
pub fn enumerate_signed_permutations(
    rows: usize,
    cols: usize,
    max_group_size: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let size = rows.max(cols);
    if size > max_group_size {
        return Err(Error::GroupTooLarge {
            size,
            limit: max_group_size,
        });
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Validation(format!("empty {rows}x{cols} block")));
    }
    if rows < cols {
        return Ok(enumerate_signed_permutations(cols, rows, max_group_size)?
            .into_iter()
            .map(|m| m.transpose())
            .collect());
    }
    let mut out = Vec::new();
    let mut assignment = Vec::with_capacity(cols);
    let mut used = vec![false; rows];
    injections(rows, cols, &mut assignment, &mut used, &mut |a| {
        for signs in 0..(1usize << cols) {
            let mut m = DMatrix::zeros(rows, cols);
            for (c, &r) in a.iter().enumerate() {
                let negative = signs >> (cols - 1 - c) & 1 == 1;
                m[(r, c)] = if negative { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    });
    Ok(out)
}

fn injections(
    rows: usize,
    cols: usize,
    assignment: &mut Vec<usize>,
    used: &mut [bool],
    emit: &mut impl FnMut(&[usize]),
) {
    if assignment.len() == cols {
        emit(assignment);
        return;
    }
    for r in 0..rows {
        if !used[r] {
            used[r] = true;
            assignment.push(r);
            injections(rows, cols, assignment, used, emit);
            assignment.pop();
            used[r] = false;
        }
    }
}

/// Fallback candidates for oversized groups: the identity block and the identity
/// block with a single sign flipped on each diagonal position.
pub fn truncated_candidates(rows: usize, cols: usize) -> Vec<DMatrix<f64>> {
    let id = DMatrix::identity(rows, cols);
    let mut out = vec![id.clone()];
    for i in 0..rows.min(cols) {
        let mut m = id.clone();
        m[(i, i)] = -1.0;
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn key(m: &DMatrix<f64>) -> Vec<i8> {
        m.iter().map(|&v| v as i8).collect()
    }

    /// Brute force over all 3^(rows*cols) matrices.
    fn oracle(rows: usize, cols: usize) -> HashSet<Vec<i8>> {
        let cells = rows * cols;
        let mut set = HashSet::new();
        for code in 0..3usize.pow(cells as u32) {
            let mut c = code;
            let vals: Vec<i8> = (0..cells)
                .map(|_| {
                    let v = (c % 3) as i8 - 1;
                    c /= 3;
                    v
                })
                .collect();
            let m = DMatrix::from_iterator(rows, cols, vals.iter().map(|&v| v as f64));
            let cols_ok = (0..cols).all(|j| m.column(j).iter().filter(|v| **v != 0.0).count() == 1);
            let rows_ok = (0..rows).all(|i| m.row(i).iter().filter(|v| **v != 0.0).count() <= 1);
            if cols_ok && rows_ok {
                set.insert(vals);
            }
        }
        set
    }

    #[test]
    fn counts_match_exhaustive_oracle() {
        for (r, c, n) in [(1, 1, 2), (2, 2, 8), (2, 1, 4), (3, 3, 48), (3, 2, 24)] {
            let got = enumerate_signed_permutations(r, c, 3).unwrap();
            assert_eq!(got.len(), n, "{r}x{c}");
            let set: HashSet<_> = got.iter().map(key).collect();
            assert_eq!(set.len(), n);
            assert_eq!(set, oracle(r, c));
        }
    }

    #[test]
    fn one_by_one_is_plus_then_minus() {
        let got = enumerate_signed_permutations(1, 1, 1).unwrap();
        assert_eq!(got[0][(0, 0)], 1.0);
        assert_eq!(got[1][(0, 0)], -1.0);
    }

    #[test]
    fn wide_blocks_are_transposed() {
        let got = enumerate_signed_permutations(1, 2, 3).unwrap();
        assert_eq!(got.len(), 4);
        assert!(got.iter().all(|m| m.shape() == (1, 2)));
    }

    #[test]
    fn oversized_group_rejected() {
        assert!(matches!(
            enumerate_signed_permutations(4, 4, 3),
            Err(Error::GroupTooLarge { size: 4, limit: 3 })
        ));
        assert_eq!(truncated_candidates(4, 4).len(), 5);
    }
}
