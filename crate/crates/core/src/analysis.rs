//! Map-space landscapes: distances between pointwise maps, classical MDS, k-means and
//! random map ensembles.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmap::PointwiseMap;
use crate::mesh::GeodesicCache;

const KMEANS_MAX_ITERATIONS: usize = 100;

/// Maps over a common set of domain rows (usually FPS samples) into one codomain.
#[derive(Debug, Clone, Default)]
pub struct MapEnsemble {
    pub maps: Vec<PointwiseMap>,
    pub labels: Vec<String>,
}

impl MapEnsemble {
    pub fn new(maps: Vec<PointwiseMap>) -> Result<Self> {
        if let Some(first) = maps.first() {
            for m in &maps {
                if m.domain_size() != first.domain_size() || m.codomain_size() != first.codomain_size() {
                    return Err(Error::DimensionMismatch(format!(
                        "ensemble maps {}->{} and {}->{}",
                        first.domain_size(),
                        first.codomain_size(),
                        m.domain_size(),
                        m.codomain_size()
                    )));
                }
            }
        }
        Ok(MapEnsemble { maps, labels: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Appends another ensemble, keeping labels aligned with maps.
    pub fn extend(&mut self, other: MapEnsemble) -> Result<()> {
        let mut all = std::mem::take(&mut self.maps);
        let mut labels = self.padded_labels();
        labels.extend(other.padded_labels());
        all.extend(other.maps);
        *self = MapEnsemble::new(all)?;
        self.labels = labels;
        Ok(())
    }

    fn padded_labels(&self) -> Vec<String> {
        let mut l = self.labels.clone();
        l.resize(self.maps.len(), String::new());
        l
    }
}

/// Mean and max normalized geodesic distance between the images of two maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapDistance {
    pub mean: f64,
    pub max: f64,
}

/// Compares `a(v)` and `b(v)` for every domain row `v` on the codomain.
pub fn map_pair_distance(a: &PointwiseMap, b: &PointwiseMap, geo: &GeodesicCache) -> Result<MapDistance> {
    if a.domain_size() != b.domain_size() {
        return Err(Error::DimensionMismatch(format!(
            "maps have {} and {} domain rows",
            a.domain_size(),
            b.domain_size()
        )));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (&x, &y) in a.targets().iter().zip(b.targets()) {
        let d = if x == y { 0.0 } else { geo.require(x, y)? };
        sum += d;
        max = max.max(d);
    }
    let n = a.domain_size().max(1) as f64;
    Ok(MapDistance { mean: sum / n, max })
}

/// All pairwise distances of an ensemble: (mean matrix, max matrix).
pub fn distance_matrices(ensemble: &MapEnsemble, geo: &GeodesicCache) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = ensemble.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values: Vec<MapDistance> = pairs
        .par_iter()
        .map(|&(i, j)| map_pair_distance(&ensemble.maps[i], &ensemble.maps[j], geo))
        .collect::<Result<_>>()?;
    let mut mean = DMatrix::zeros(n, n);
    let mut max = DMatrix::zeros(n, n);
    for (&(i, j), d) in pairs.iter().zip(values) {
        mean[(i, j)] = d.mean;
        mean[(j, i)] = d.mean;
        max[(i, j)] = d.max;
        max[(j, i)] = d.max;
    }
    Ok((mean, max))
}

/// Two-dimensional embedding of a map ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape2D {
    pub coordinates: Vec<[f64; 2]>,
    /// Kruskal stress-1 of the embedded distances against the input.
    pub stress: f64,
    pub cluster_ids: Option<Vec<usize>>,
}

/// Classical (Torgerson) MDS onto the top two eigenvectors of the double-centered
/// squared distances.
pub fn mds_embed(dist: &DMatrix<f64>) -> Result<Landscape2D> {
    let n = dist.nrows();
    if dist.ncols() != n {
        return Err(Error::DimensionMismatch(format!("distance matrix is {}x{}", n, dist.ncols())));
    }
    let scale = dist.amax().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (dist[(i, j)] - dist[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NonSymmetric { row: i, col: j });
            }
        }
    }
    if n == 0 {
        return Ok(Landscape2D { coordinates: Vec::new(), stress: 0.0, cluster_ids: None });
    }
    let sq = dist.map(|d| d * d);
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let total_mean = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + total_mean));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let mut coordinates = vec![[0.0; 2]; n];
    for (axis, &e) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[e].max(0.0);
        let mut v = eig.eigenvectors.column(e).into_owned();
        // first entry of largest magnitude is made positive
        let mut pivot = 0;
        for i in 0..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v = -v;
        }
        for i in 0..n {
            coordinates[i][axis] = v[i] * lambda.sqrt();
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = planar_distance(coordinates[i], coordinates[j]);
            num += (dist[(i, j)] - d).powi(2);
            den += dist[(i, j)].powi(2);
        }
    }
    let stress = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(Landscape2D { coordinates, stress, cluster_ids: None })
}

fn planar_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Lloyd's algorithm from `k` distinct seeded starting points; stops when assignments
/// settle or after 100 iterations. Ties go to the lowest cluster id.
pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::KTooLarge { requested: k, available: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = sample(&mut rng, points.len(), k).into_vec();
    start.sort_unstable();
    let mut centers: Vec<[f64; 2]> = start.iter().map(|&i| points[i]).collect();
    let mut ids = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let next: Vec<usize> = points
            .iter()
            .map(|&p| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (c, &center) in centers.iter().enumerate() {
                    let d = planar_distance(p, center);
                    if d < best_d {
                        best = c;
                        best_d = d;
                    }
                }
                best
            })
            .collect();
        if next == ids {
            break;
        }
        ids = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<[f64; 2]> = points.iter().zip(&ids).filter(|(_, &i)| i == c).map(|(p, _)| *p).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *center = [
                    members.iter().map(|p| p[0]).sum::<f64>() / m,
                    members.iter().map(|p| p[1]).sum::<f64>() / m,
                ];
            }
        }
    }
    Ok(ids)
}

/// Mean silhouette coefficient of a clustering under the given distances. Points in
/// singleton clusters score 0.
pub fn silhouette(dist: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    if dist.nrows() != n || dist.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for a {}x{} distance matrix",
            n,
            dist.nrows(),
            dist.ncols()
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let clusters = labels.iter().copied().max().unwrap_or(0) + 1;
    let total: f64 = (0..n)
        .map(|i| {
            let mut sums = vec![0.0; clusters];
            let mut counts = vec![0usize; clusters];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dist[(i, j)];
                    counts[labels[j]] += 1;
                }
            }
            let own = labels[i];
            if counts[own] == 0 {
                return 0.0;
            }
            let a = sums[own] / counts[own] as f64;
            let b = (0..clusters)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .sum();
    Ok(total / n as f64)
}

/// `count` maps sending each of `domain_size` rows to a uniformly random target.
pub fn random_maps(domain_size: usize, codomain_size: usize, count: usize, seed: u64) -> Result<MapEnsemble> {
    if codomain_size == 0 {
        return Err(Error::DimensionMismatch("random maps need a non-empty codomain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps = (0..count)
        .map(|_| {
            let t = (0..domain_size).map(|_| rng.gen_range(0..codomain_size)).collect();
            PointwiseMap::new(t, codomain_size)
        })
        .collect::<Result<_>>()?;
    MapEnsemble::new(maps)
}

/// Writes `map_id,x,y,cluster,geodesic_distortion`; empty fields for missing values.
pub fn write_landscape_csv(
    path: impl AsRef<Path>,
    landscape: &Landscape2D,
    distortion: Option<&[f64]>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("map_id,x,y,cluster,geodesic_distortion\n");
    for (i, c) in landscape.coordinates.iter().enumerate() {
        let cluster = landscape
            .cluster_ids
            .as_ref()
            .map(|ids| ids[i].to_string())
            .unwrap_or_default();
        let gd = distortion.map(|d| format!("{:e}", d[i])).unwrap_or_default();
        out.push_str(&format!("{i},{:e},{:e},{cluster},{gd}\n", c[0], c[1]));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
