//! Choosing among candidate maps: cycle-consistency selection over shape collections
//! and automatic self-symmetry selection.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{normalized_energies, FunctionalMap, PointwiseMap};
use crate::mesh::GeodesicCache;
use crate::TriangleMesh;

/// Functional map size used for cycle products.
pub const DEFAULT_SELECTION_SIZE: usize = 20;
pub const DEFAULT_MAX_SWEEPS: usize = 5;
/// Mean normalized displacement below which a self-map counts as the identity.
pub const DEFAULT_SYMMETRY_THRESHOLD: f64 = 0.02;
pub const DEFAULT_REGION_THRESHOLD: f64 = 0.05;

/// Relative slack under which two energies are treated as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// One candidate map between a pair of shapes.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// `C_ab`, rows in the basis of `a`: pulls functions on `b` back to `a`.
    pub fmap: DMatrix<f64>,
    /// Orientation surrogate used to initialize the selection.
    pub orientation_flip: f64,
}

#[derive(Debug, Clone)]
pub struct PairCandidates {
    pub a: usize,
    pub b: usize,
    pub candidates: Vec<Candidate>,
}

/// Candidate maps for unordered shape pairs `a < b`. The reverse map `C_ba` is taken
/// as the transpose of `C_ab`.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pairs: Vec<PairCandidates>,
    index: HashMap<(usize, usize), usize>,
    size: usize,
}

impl CandidateSet {
    pub fn new(pairs: Vec<PairCandidates>) -> Result<Self> {
        let mut index = HashMap::new();
        let mut size = None;
        for (i, p) in pairs.iter().enumerate() {
            if p.a == p.b {
                return Err(Error::DimensionMismatch(format!("pair ({}, {}) maps a shape to itself", p.a, p.b)));
            }
            if p.candidates.is_empty() {
                return Err(Error::EmptyCandidates(format!("pair ({}, {})", p.a, p.b)));
            }
            for c in &p.candidates {
                let (r, k) = c.fmap.shape();
                if r != k || size.is_some_and(|s| s != r) {
                    return Err(Error::DimensionMismatch(format!(
                        "candidate for ({}, {}) is {r}x{k}, expected a common square size",
                        p.a, p.b
                    )));
                }
                size = Some(r);
            }
            let key = (p.a.min(p.b), p.a.max(p.b));
            if index.insert(key, i).is_some() {
                return Err(Error::DimensionMismatch(format!("pair {key:?} listed twice")));
            }
        }
        let pairs = pairs
            .into_iter()
            .map(|p| {
                if p.a < p.b {
                    p
                } else {
                    let candidates = p
                        .candidates
                        .into_iter()
                        .map(|c| Candidate { fmap: c.fmap.transpose(), ..c })
                        .collect();
                    PairCandidates { a: p.b, b: p.a, candidates }
                }
            })
            .collect();
        Ok(CandidateSet { pairs, index, size: size.unwrap_or(0) })
    }

    pub fn pairs(&self) -> &[PairCandidates] {
        &self.pairs
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&(a.min(b), a.max(b))).copied()
    }

    /// `C_ab` under the given selection (transposed when stored as `(b, a)`).
    fn selected(&self, selection: &[usize], a: usize, b: usize) -> Option<DMatrix<f64>> {
        let i = self.pair_index(a, b)?;
        let m = &self.pairs[i].candidates[selection[i]].fmap;
        Some(if self.pairs[i].a == a { m.clone() } else { m.transpose() })
    }

    /// Partners `j` that close a triangle with pair `i` in one of the triplets.
    fn partners(&self, i: usize, triplets: &[[usize; 3]]) -> Vec<usize> {
        let (a, b) = (self.pairs[i].a, self.pairs[i].b);
        let mut out: Vec<usize> = triplets
            .iter()
            .filter(|t| t.contains(&a) && t.contains(&b))
            .filter_map(|t| t.iter().copied().find(|&j| j != a && j != b))
            .filter(|&j| self.pair_index(a, j).is_some() && self.pair_index(j, b).is_some())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Cycle-consistency residual of `c12` for pair `pair` with every other pair fixed at
/// `selection`: over partners `j`,
/// `|C_1j C_j2 - C_12| + |C_12 C_2j - C_1j| + |C_j1 C_12 - C_j2|` (Frobenius).
pub fn cycle_energy(
    set: &CandidateSet,
    pair: usize,
    c12: &DMatrix<f64>,
    selection: &[usize],
    triplets: &[[usize; 3]],
) -> Result<f64> {
    if c12.shape() != (set.size, set.size) {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, selection size is {}",
            c12.nrows(),
            c12.ncols(),
            set.size
        )));
    }
    let (a, b) = (set.pairs[pair].a, set.pairs[pair].b);
    let mut total = 0.0;
    for j in set.partners(pair, triplets) {
        let c1j = set.selected(selection, a, j).expect("partner pairs exist");
        let cj2 = set.selected(selection, j, b).expect("partner pairs exist");
        let c2j = cj2.transpose();
        let cj1 = c1j.transpose();
        total += (&c1j * &cj2 - c12).norm();
        total += (c12 * &c2j - &c1j).norm();
        total += (&cj1 * c12 - &cj2).norm();
    }
    Ok(total)
}

/// One accepted change during the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionUpdate {
    pub sweep: usize,
    pub pair: usize,
    pub from: usize,
    pub to: usize,
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: Vec<usize>,
    pub energies: Vec<f64>,
    /// Sweeps executed, including the final one that changed nothing.
    pub sweeps: usize,
    pub converged: bool,
    pub history: Vec<SelectionUpdate>,
}

/// Per pair, the candidate with the smallest orientation flip fraction (lowest index on ties).
pub fn orientation_initialization(set: &CandidateSet) -> Vec<usize> {
    set.pairs
        .iter()
        .map(|p| {
            let mut best = 0;
            for (i, c) in p.candidates.iter().enumerate() {
                if c.orientation_flip < p.candidates[best].orientation_flip {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Coordinate descent on the cycle energy starting from the orientation initialization.
pub fn select_by_cycles(set: &CandidateSet, triplets: &[[usize; 3]], max_sweeps: usize) -> Result<SelectionResult> {
    select_by_cycles_from(set, triplets, orientation_initialization(set), max_sweeps)
}

/// Coordinate descent from an explicit initial selection. Pairs are visited in stored
/// order; a pair moves to the candidate of least energy (lowest index on ties) only
/// when that strictly improves on its current choice.
pub fn select_by_cycles_from(
    set: &CandidateSet,
    triplets: &[[usize; 3]],
    initial: Vec<usize>,
    max_sweeps: usize,
) -> Result<SelectionResult> {
    if initial.len() != set.pairs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} initial choices for {} pairs",
            initial.len(),
            set.pairs.len()
        )));
    }
    for (i, (&s, p)) in initial.iter().zip(&set.pairs).enumerate() {
        if s >= p.candidates.len() {
            return Err(Error::DimensionMismatch(format!("pair {i}: choice {s} out of range")));
        }
    }
    let mut selection = initial;
    let mut history = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for i in 0..set.pairs.len() {
            let energies: Vec<f64> = set.pairs[i]
                .candidates
                .par_iter()
                .map(|c| cycle_energy(set, i, &c.fmap, &selection, triplets))
                .collect::<Result<_>>()?;
            let best = argmin(&energies);
            let current = selection[i];
            if best != current && !tied(energies[best], energies[current]) {
                history.push(SelectionUpdate {
                    sweep: sweeps,
                    pair: i,
                    from: current,
                    to: best,
                    energy_before: energies[current],
                    energy_after: energies[best],
                });
                selection[i] = best;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    let energies = (0..set.pairs.len())
        .map(|i| cycle_energy(set, i, &set.pairs[i].candidates[selection[i]].fmap, &selection, triplets))
        .collect::<Result<_>>()?;
    Ok(SelectionResult { chosen: selection, energies, sweeps, converged, history })
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Index of the smallest value; values tied with the minimum resolve to the lowest index.
fn argmin(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| tied(v, min)).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrySelection {
    pub index: usize,
    /// Mean normalized displacement of the chosen map.
    pub displacement: f64,
    pub no_symmetry_found: bool,
}

/// Mean normalized geodesic distance between `v` and `pmap(v)` over `samples`.
pub fn mean_displacement(pmap: &PointwiseMap, geo: &GeodesicCache, samples: &[usize]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let total = samples
        .iter()
        .map(|&v| {
            let t = pmap.get(v);
            if t == v {
                Ok(0.0)
            } else {
                geo.require(v, t)
            }
        })
        .sum::<Result<f64>>()?;
    Ok(total / samples.len() as f64)
}

/// Picks the self-map farthest from the identity among those whose Laplacian
/// commutativity error is at most the (upper) median of the set. When every candidate
/// stays within `threshold` of the identity, the least displaced one is returned with
/// the `no_symmetry_found` flag.
pub fn select_self_symmetry(
    candidates: &[(FunctionalMap, PointwiseMap)],
    eigenvalues: &[f64],
    geo: &GeodesicCache,
    samples: &[usize],
    threshold: f64,
) -> Result<SymmetrySelection> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates("no self-map candidates".into()));
    }
    let mut lap = Vec::with_capacity(candidates.len());
    let mut disp = Vec::with_capacity(candidates.len());
    for (c, p) in candidates {
        let (r, k) = (c.rows(), c.cols());
        if r > eigenvalues.len() || k > eigenvalues.len() {
            return Err(Error::DimensionMismatch(format!(
                "{r}x{k} map with {} eigenvalues",
                eigenvalues.len()
            )));
        }
        lap.push(normalized_energies(&c.matrix, &eigenvalues[..r], &eigenvalues[..k])?.1);
        disp.push(mean_displacement(p, geo, samples)?);
    }
    let mut sorted = lap.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut best: Option<usize> = None;
    for i in 0..candidates.len() {
        if lap[i] <= median && best.is_none_or(|b| disp[i] > disp[b]) {
            best = Some(i);
        }
    }
    let best = best.expect("the median element passes its own gate");
    if disp[best] < threshold {
        let mut id = 0;
        for i in 1..disp.len() {
            if disp[i] < disp[id] {
                id = i;
            }
        }
        return Ok(SymmetrySelection { index: id, displacement: disp[id], no_symmetry_found: true });
    }
    Ok(SymmetrySelection { index: best, displacement: disp[best], no_symmetry_found: false })
}

/// Vertices whose round trip `v -> T(v) -> T(T(v))` returns within `threshold`
/// (normalized geodesic distance) and whose displacement is at most three times the
/// median displacement of their 1-ring.
pub fn extract_symmetric_region(
    pmap: &PointwiseMap,
    mesh: &TriangleMesh,
    geo: &GeodesicCache,
    threshold: f64,
) -> Result<Vec<bool>> {
    let n = mesh.num_vertices();
    if pmap.domain_size() != n || pmap.codomain_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "self-map is {}->{}, mesh has {n} vertices",
            pmap.domain_size(),
            pmap.codomain_size()
        )));
    }
    let dist = |a: usize, b: usize| if a == b { Ok(0.0) } else { geo.require(a, b) };
    let disp: Vec<f64> = (0..n).map(|v| dist(v, pmap.get(v))).collect::<Result<_>>()?;
    (0..n)
        .map(|v| {
            let round_trip = dist(v, pmap.get(pmap.get(v)))?;
            let mut ring: Vec<f64> = mesh.neighbors(v).iter().map(|&u| disp[u]).collect();
            let consistent = if ring.is_empty() {
                true
            } else {
                ring.sort_by(f64::total_cmp);
                disp[v] <= 3.0 * ring[ring.len() / 2]
            };
            Ok(round_trip <= threshold && consistent)
        })
        .collect()
}
