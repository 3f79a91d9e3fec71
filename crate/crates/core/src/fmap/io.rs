use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FunctionalMap, PointwiseMap};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct FmapJson {
    source_id: String,
    target_id: String,
    rows: usize,
    cols: usize,
    row_major_values: Vec<f64>,
}

impl FunctionalMap {
    pub fn to_json(&self) -> serde_json::Value {
        let (rows, cols) = self.matrix.shape();
        let row_major_values = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect();
        serde_json::to_value(FmapJson {
            source_id: self.source_id.clone(),
            target_id: self.target_id.clone(),
            rows,
            cols,
            row_major_values,
        })
        .expect("plain struct serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let raw: FmapJson = serde_json::from_value(value)?;
        if raw.rows == 0 || raw.cols == 0 || raw.row_major_values.len() != raw.rows * raw.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} map with {} values",
                raw.rows,
                raw.cols,
                raw.row_major_values.len()
            )));
        }
        Ok(FunctionalMap {
            matrix: DMatrix::from_row_slice(raw.rows, raw.cols, &raw.row_major_values),
            source_id: raw.source_id,
            target_id: raw.target_id,
        })
    }
}

pub fn write_fmap_json(path: impl AsRef<Path>, fmap: &FunctionalMap) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&fmap.to_json())?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_fmap_json(path: impl AsRef<Path>) -> Result<FunctionalMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FunctionalMap::from_json(serde_json::from_str(&text)?)
}

impl PointwiseMap {
    /// `"n_source n_target"` header, then one 0-based target per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.domain_size(), self.codomain_size());
        for t in self.targets() {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty map file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(1, format!("bad header: {e}")))?;
        let [n_source, n_target] = nums[..] else {
            return Err(err(1, "header needs two counts".into()));
        };
        let mut targets = Vec::with_capacity(n_source);
        for (i, l) in lines {
            let t = l
                .trim()
                .parse::<usize>()
                .map_err(|e| err(i + 1, format!("bad index: {e}")))?;
            if t >= n_target {
                return Err(err(i + 1, format!("index {t} out of range {n_target}")));
            }
            targets.push(t);
        }
        if targets.len() != n_source {
            return Err(err(
                0,
                format!("header promises {n_source} entries, found {}", targets.len()),
            ));
        }
        PointwiseMap::new(targets, n_target)
    }
}

pub fn write_pointwise_text(path: impl AsRef<Path>, pmap: &PointwiseMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pmap.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_pointwise_text(path: impl AsRef<Path>) -> Result<PointwiseMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PointwiseMap::from_text(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmap_json_round_trip() {
        let f = FunctionalMap::new(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, -0.125]))
            .with_ids("a", "b");
        let v = f.to_json();
        assert_eq!(v["row_major_values"][2], 3.0);
        assert_eq!(FunctionalMap::from_json(v).unwrap(), f);
    }

    #[test]
    fn pointwise_text_round_trip() {
        let p = PointwiseMap::new(vec![2, 0, 1, 1], 3).unwrap();
        let t = p.to_text();
        assert!(t.starts_with("4 3\n2\n"));
        assert_eq!(PointwiseMap::from_text(&t, "x").unwrap(), p);
        assert!(PointwiseMap::from_text("2 3\n0\n", "x").is_err());
        assert!(PointwiseMap::from_text("1 3\n7\n", "x").is_err());
    }
}
