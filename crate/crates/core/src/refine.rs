//! Map refinement by spectral upsampling: plain ZoomOut and the bijective variant that
//! refines both directions of a map pair together.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmap::{energy_zoomout, nearest_rows, FunctionalMap, PointwiseMap, SpectralDomain};

/// Frequency schedule of a refinement run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub k_init: usize,
    pub k_step: usize,
    pub k_final: usize,
    /// Samples per shape used as NN candidates.
    pub sample_count: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            k_init: 5,
            k_step: 1,
            k_final: 50,
            sample_count: 300,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_init == 0 || self.k_init > self.k_final || self.k_step == 0 {
            return Err(Error::Validation(format!(
                "bad refinement schedule {}..{} step {}",
                self.k_init, self.k_final, self.k_step
            )));
        }
        if self.sample_count < self.k_final {
            return Err(Error::Validation(format!(
                "sample_count {} is below k_final {}",
                self.sample_count, self.k_final
            )));
        }
        Ok(())
    }

    /// The increasing sequence of basis sizes visited.
    pub fn schedule(&self) -> Vec<usize> {
        (self.k_init..=self.k_final).step_by(self.k_step).collect()
    }
}

/// Maps in both directions between two domains (vertex sets or sample sets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapPair {
    pub pi_12: PointwiseMap,
    pub pi_21: PointwiseMap,
}

impl MapPair {
    pub fn new(pi_12: PointwiseMap, pi_21: PointwiseMap) -> Result<Self> {
        if pi_12.domain_size() != pi_21.codomain_size() || pi_12.codomain_size() != pi_21.domain_size() {
            return Err(Error::DimensionMismatch(format!(
                "pair {}->{} and {}->{} is inconsistent",
                pi_12.domain_size(),
                pi_12.codomain_size(),
                pi_21.domain_size(),
                pi_21.codomain_size()
            )));
        }
        Ok(MapPair { pi_12, pi_21 })
    }

    pub fn swapped(&self) -> MapPair {
        MapPair {
            pi_12: self.pi_21.clone(),
            pi_21: self.pi_12.clone(),
        }
    }
}

/// Per-iteration energies of a bijective run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub k: usize,
    pub e_zm_12: f64,
    pub e_zm_21: f64,
    /// Coupling term `sum_k (1/k) (||C12 C21 - I||^2 + ||C21 C12 - I||^2)`.
    pub e_bij: f64,
}

impl EnergyRecord {
    pub fn total(&self) -> f64 {
        self.e_zm_12 + self.e_zm_21 + self.e_bij
    }
}

/// CSV text with header `k,e_zm_12,e_zm_21,e_bij`.
pub fn energy_log_csv(records: &[EnergyRecord]) -> String {
    let mut s = String::from("k,e_zm_12,e_zm_21,e_bij\n");
    for r in records {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", r.k, r.e_zm_12, r.e_zm_21, r.e_bij);
    }
    s
}

fn coupling(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (1..=a.nrows())
        .map(|k| {
            let mut p = a.view((0, 0), (k, k)) * b.view((0, 0), (k, k));
            for i in 0..k {
                p[(i, i)] -= 1.0;
            }
            p.norm_squared() / k as f64
        })
        .sum()
}

/// Bijective energy of a pair of square maps of equal size.
pub fn bijective_energy(c12: &DMatrix<f64>, c21: &DMatrix<f64>, k: usize) -> Result<EnergyRecord> {
    Ok(EnergyRecord {
        k,
        e_zm_12: energy_zoomout(c12)?,
        e_zm_21: energy_zoomout(c21)?,
        e_bij: coupling(c12, c21) + coupling(c21, c12),
    })
}

/// Energy of the functional maps induced by the pair at size `k`.
pub fn pair_energy(pair: &MapPair, d1: &SpectralDomain, d2: &SpectralDomain, k: usize) -> Result<EnergyRecord> {
    let c12 = d2.pull_back(&pair.pi_21, d1, k, k)?;
    let c21 = d1.pull_back(&pair.pi_12, d2, k, k)?;
    bijective_energy(&c12, &c21, k)
}

fn weights(d: &SpectralDomain, mass: Option<&[f64]>) -> Vec<f64> {
    match mass {
        Some(m) => d.vertices().iter().map(|&v| m[v]).collect(),
        None => vec![1.0; d.len()],
    }
}

/// Solves `min_X || [A_top; A_bot] X - [B_top; B_bot] ||` with row weights, via damped
/// normal equations.
fn stacked_lstsq(
    a_top: &DMatrix<f64>,
    b_top: &DMatrix<f64>,
    w_top: &[f64],
    a_bot: &DMatrix<f64>,
    b_bot: &DMatrix<f64>,
    w_bot: &[f64],
) -> Result<DMatrix<f64>> {
    let scale = |m: &DMatrix<f64>, w: &[f64]| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * w[i]);
    let wa_top = scale(a_top, w_top);
    let wa_bot = scale(a_bot, w_bot);
    let mut gram = wa_top.tr_mul(a_top) + wa_bot.tr_mul(a_bot);
    let rhs = wa_top.tr_mul(b_top) + wa_bot.tr_mul(b_bot);
    let k = gram.nrows();
    let damping = crate::fmap::SAMPLE_DAMPING * (gram.trace() / k as f64).max(1e-300);
    for i in 0..k {
        gram[(i, i)] += damping;
    }
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularLeastSquares)
}

fn concat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// One bijective iteration at size `k`. `masses` supplies per-vertex weights for the
/// coupled least-squares fit (None weighs all rows equally).
pub(crate) fn bijective_step(
    pair: &MapPair,
    d1: &SpectralDomain,
    d2: &SpectralDomain,
    k: usize,
    masses: Option<(&[f64], &[f64])>,
) -> Result<MapPair> {
    let c12 = d2.pull_back(&pair.pi_21, d1, k, k)?;
    let c21 = d1.pull_back(&pair.pi_12, d2, k, k)?;
    let pi_12 = d1.nn_from_fmap(&c21, d2)?;
    let pi_21 = d2.nn_from_fmap(&c12, d1)?;

    let phi1 = d1.phi(k);
    let phi2 = d2.phi(k);
    let phi2_at_12 = d2.phi_at(pi_12.targets(), k);
    let phi1_at_21 = d1.phi_at(pi_21.targets(), k);
    let w1 = weights(d1, masses.map(|m| m.0));
    let w2 = weights(d2, masses.map(|m| m.1));
    let c12 = stacked_lstsq(&phi2, &phi1_at_21, &w2, &phi2_at_12, &phi1, &w1)?;
    let c21 = stacked_lstsq(&phi1, &phi2_at_12, &w1, &phi1_at_21, &phi2, &w2)?;

    let pi_12 = PointwiseMap::new(
        nearest_rows(
            &concat(&(&phi2 * c21.transpose()), &(&phi2 * &c12)),
            &concat(&phi1, &phi1),
        ),
        d2.len(),
    )?;
    let pi_21 = PointwiseMap::new(
        nearest_rows(
            &concat(&(&phi1 * c12.transpose()), &(&phi1 * &c21)),
            &concat(&phi2, &phi2),
        ),
        d1.len(),
    )?;
    Ok(MapPair { pi_12, pi_21 })
}

fn check_domains(pair: &MapPair, d1: &SpectralDomain, d2: &SpectralDomain, k_final: usize) -> Result<()> {
    if pair.pi_12.domain_size() != d1.len() || pair.pi_21.domain_size() != d2.len() {
        return Err(Error::DimensionMismatch(format!(
            "pair covers {} and {} rows, domains have {} and {}",
            pair.pi_12.domain_size(),
            pair.pi_21.domain_size(),
            d1.len(),
            d2.len()
        )));
    }
    MapPair::new(pair.pi_12.clone(), pair.pi_21.clone())?;
    if k_final > d1.kmax() || k_final > d2.kmax() {
        return Err(Error::DimensionMismatch(format!(
            "k_final {k_final} exceeds bases of {} and {}",
            d1.kmax(),
            d2.kmax()
        )));
    }
    Ok(())
}

/// Bijective ZoomOut over the configured schedule. Returns the refined pair and the
/// energy of the initial pair (at `k_init`) followed by one record per iteration.
pub fn bijective_zoomout_logged(
    pair: &MapPair,
    d1: &SpectralDomain,
    d2: &SpectralDomain,
    cfg: &RefineConfig,
) -> Result<(MapPair, Vec<EnergyRecord>)> {
    check_domains(pair, d1, d2, cfg.k_final)?;
    let mut log = vec![pair_energy(pair, d1, d2, cfg.k_init)?];
    let mut cur = pair.clone();
    for k in cfg.schedule() {
        cur = bijective_step(&cur, d1, d2, k, None)?;
        log.push(pair_energy(&cur, d1, d2, k)?);
    }
    Ok((cur, log))
}

pub fn bijective_zoomout(
    pair: &MapPair,
    d1: &SpectralDomain,
    d2: &SpectralDomain,
    cfg: &RefineConfig,
) -> Result<MapPair> {
    let (out, log) = bijective_zoomout_logged(pair, d1, d2, cfg)?;
    if log::log_enabled!(log::Level::Debug) {
        log::debug!("bijective energy log\n{}", energy_log_csv(&log));
    }
    Ok(out)
}

/// Single-direction ZoomOut: pointwise-to-functional conversion then NN update, growing k.
pub fn zoomout(
    pmap: &PointwiseMap,
    d1: &SpectralDomain,
    d2: &SpectralDomain,
    cfg: &RefineConfig,
) -> Result<PointwiseMap> {
    if pmap.domain_size() != d1.len() || pmap.codomain_size() != d2.len() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}->{}, domains have {} and {} rows",
            pmap.domain_size(),
            pmap.codomain_size(),
            d1.len(),
            d2.len()
        )));
    }
    let mut cur = pmap.clone();
    for k in cfg.schedule() {
        let c21 = d1.pull_back(&cur, d2, k, k)?;
        cur = d1.nn_from_fmap(&c21, d2)?;
    }
    Ok(cur)
}

/// Initial pair from a functional seed: independent NN in both directions.
pub fn pair_from_fmap(c21: &DMatrix<f64>, d1: &SpectralDomain, d2: &SpectralDomain) -> Result<MapPair> {
    let pi_12 = d1.nn_from_fmap(c21, d2)?;
    let pi_21 = d2.nn_from_fmap(&c21.transpose(), d1)?;
    MapPair::new(pi_12, pi_21)
}

/// Refines a (possibly rectangular) seed `C_21` by `budget` upsampling steps and
/// converts the result back to the seed's dimensions.
pub fn refine_node(
    fmap_init: &FunctionalMap,
    d1: &SpectralDomain,
    d2: &SpectralDomain,
    budget: usize,
) -> Result<(FunctionalMap, MapPair)> {
    let (rows, cols) = (fmap_init.rows(), fmap_init.cols());
    let pair = pair_from_fmap(&fmap_init.matrix, d1, d2)?;
    let k0 = rows.max(cols);
    let k_end = (k0 + budget).min(d1.kmax()).min(d2.kmax());
    let mut cur = pair;
    for k in k0..=k_end {
        cur = bijective_step(&cur, d1, d2, k, None)?;
    }
    let c21 = d1.pull_back(&cur.pi_12, d2, rows, cols)?;
    let out = FunctionalMap {
        matrix: c21,
        source_id: fmap_init.source_id.clone(),
        target_id: fmap_init.target_id.clone(),
    };
    Ok((out, cur))
}
