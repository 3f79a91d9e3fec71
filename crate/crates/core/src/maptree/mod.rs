//! The map tree: low-frequency functional maps grown one eigenvalue group at a time,
//! refined, pruned, and finally upsampled to dense correspondences.

mod enumerate;
mod json;

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmap::{
    embed_block, fmap_distance, normalized_energies, pointwise_to_functional, FunctionalMap,
    PointwiseMap, SpectralDomain,
};
use crate::refine::{bijective_step, refine_node, MapPair};
use crate::spectral::{group_eigenvalues, SpectralBasis};

pub use enumerate::{enumerate_signed_permutations, truncated_candidates};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Unexplored,
    Explored,
    PrunedQuality,
    PrunedDuplicate,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Unexplored => "unexplored",
            NodeStatus::Explored => "explored",
            NodeStatus::PrunedQuality => "pruned_quality",
            NodeStatus::PrunedDuplicate => "pruned_duplicate",
        }
    }

    pub fn is_pruned(self) -> bool {
        matches!(self, NodeStatus::PrunedQuality | NodeStatus::PrunedDuplicate)
    }
}

#[derive(Debug, Clone)]
pub struct MapTreeNode {
    pub id: usize,
    /// Refined map `C_21` at the node's size.
    pub fmap: FunctionalMap,
    pub status: NodeStatus,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Normalized `(E_ortho, E_lapComm)` at pruning time.
    pub energies: (f64, f64),
    /// Frobenius gap between the leading parent-sized block and the parent's map.
    pub parent_deviation: f64,
    /// Refined maps between the sample sets.
    pub pair: Option<MapPair>,
    /// Dense vertex-level maps, filled in for surviving leaves after exploration.
    pub dense: Option<MapPair>,
    /// No further eigenfunctions were available to grow this node.
    pub terminal: bool,
}

impl MapTreeNode {
    pub fn dims(&self) -> (usize, usize) {
        (self.fmap.rows(), self.fmap.cols())
    }

    pub fn size(&self) -> usize {
        self.fmap.rows().max(self.fmap.cols())
    }

    /// Not pruned and without children.
    pub fn is_live_leaf(&self) -> bool {
        !self.status.is_pruned() && self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationConfig {
    pub epsilon_group: f64,
    pub epsilon_ortho: f64,
    pub epsilon_lapcomm: f64,
    pub kappa: usize,
    pub max_group_size: usize,
    pub dedup_agreement: f64,
    pub refine_budget: usize,
    pub sample_count: usize,
    pub k_final: usize,
    pub max_leaves: usize,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            epsilon_group: 1.0,
            epsilon_ortho: 0.5,
            epsilon_lapcomm: 0.5,
            kappa: 10,
            max_group_size: 3,
            dedup_agreement: 0.95,
            refine_budget: 20,
            sample_count: 300,
            k_final: 50,
            max_leaves: 64,
        }
    }
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.epsilon_group, self.epsilon_ortho, self.epsilon_lapcomm];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Validation("thresholds must be positive".into()));
        }
        if self.kappa < 2 {
            return Err(Error::Validation("kappa must be at least 2".into()));
        }
        if !(self.dedup_agreement > 0.0 && self.dedup_agreement <= 1.0) {
            return Err(Error::Validation("dedup_agreement must lie in (0, 1]".into()));
        }
        if self.max_group_size == 0 || self.max_leaves == 0 || self.sample_count == 0 {
            return Err(Error::Validation(
                "max_group_size, max_leaves and sample_count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of eigenfunctions exploration and final refinement need.
    pub fn basis_size(&self) -> usize {
        self.k_final
            .max(self.kappa + 1 + self.max_group_size + self.refine_budget)
    }
}

/// Spectral domains of both shapes: sample sets for exploration, full vertex sets for
/// the final dense step.
#[derive(Debug, Clone)]
pub struct PairDomains {
    pub sampled1: SpectralDomain,
    pub sampled2: SpectralDomain,
    pub full1: SpectralDomain,
    pub full2: SpectralDomain,
}

impl PairDomains {
    pub fn new(basis1: &SpectralBasis, basis2: &SpectralBasis, samples1: &[usize], samples2: &[usize]) -> Self {
        PairDomains {
            sampled1: SpectralDomain::sampled(basis1, samples1),
            sampled2: SpectralDomain::sampled(basis2, samples2),
            full1: SpectralDomain::full(basis1),
            full2: SpectralDomain::full(basis2),
        }
    }

    fn kmax(&self) -> usize {
        self.sampled1.kmax().min(self.sampled2.kmax())
    }
}

#[derive(Debug, Clone)]
pub struct MapTree {
    pub nodes: Vec<MapTreeNode>,
    pub shape_ids: (String, String),
    pub config: ExplorationConfig,
    /// Set when the live-leaf cap stopped candidates from being attached.
    pub leaf_cap_hit: bool,
    pub warnings: Vec<String>,
}

impl MapTree {
    pub fn root(&self) -> &MapTreeNode {
        &self.nodes[0]
    }

    /// Live leaves in creation order.
    pub fn surviving_leaves(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.is_live_leaf() && n.parent.is_some())
            .map(|n| n.id)
            .collect()
    }

    fn live_leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_live_leaf()).count()
    }

    /// Parent/child size monotonicity and pruned-nodes-are-childless.
    pub fn check_well_formed(&self) -> Result<()> {
        for n in &self.nodes {
            if n.status.is_pruned() && !n.children.is_empty() {
                return Err(Error::Validation(format!("pruned node {} has children", n.id)));
            }
            for &c in &n.children {
                let child = &self.nodes[c];
                if child.parent != Some(n.id) || child.fmap.rows() <= n.fmap.rows() || child.fmap.cols() <= n.fmap.cols() {
                    return Err(Error::Validation(format!("bad edge {} -> {c}", n.id)));
                }
            }
        }
        Ok(())
    }
}

/// Root node `[sum phi_1^{S2} / sum phi_1^{S1}]`.
pub fn init_tree(basis1: &SpectralBasis, basis2: &SpectralBasis, cfg: ExplorationConfig) -> Result<MapTree> {
    cfg.validate()?;
    if basis1.k() == 0 || basis2.k() == 0 {
        return Err(Error::Validation("empty basis".into()));
    }
    let s1: f64 = basis1.eigenfunctions.column(0).sum();
    let s2: f64 = basis2.eigenfunctions.column(0).sum();
    if s1.abs() < 1e-300 || !s1.is_finite() {
        return Err(Error::ZeroConstantSum);
    }
    let root = MapTreeNode {
        id: 0,
        fmap: FunctionalMap::new(DMatrix::from_element(1, 1, s2 / s1)),
        status: NodeStatus::Unexplored,
        parent: None,
        children: Vec::new(),
        energies: (0.0, 0.0),
        parent_deviation: 0.0,
        pair: None,
        dense: None,
        terminal: false,
    };
    Ok(MapTree {
        nodes: vec![root],
        shape_ids: (String::new(), String::new()),
        config: cfg,
        leaf_cap_hit: false,
        warnings: Vec::new(),
    })
}

struct Candidate {
    fmap: FunctionalMap,
    pair: MapPair,
    energies: (f64, f64),
    parent_deviation: f64,
}

fn candidate_blocks(tree: &mut MapTree, node: usize, domains: &PairDomains) -> Result<Vec<DMatrix<f64>>> {
    let (r, c) = tree.nodes[node].dims();
    let kmax = domains.kmax();
    if r >= kmax || c >= kmax {
        return Err(Error::BasisExhausted { index: r.max(c) });
    }
    let cfg = &tree.config;
    let e1 = &domains.sampled1.eigenvalues()[..kmax];
    let e2 = &domains.sampled2.eigenvalues()[..kmax];
    let g1 = group_eigenvalues(e1, r, cfg.epsilon_group);
    let g2 = group_eigenvalues(e2, c, cfg.epsilon_group);
    match enumerate_signed_permutations(g1.len(), g2.len(), cfg.max_group_size) {
        Ok(b) => Ok(b),
        Err(Error::GroupTooLarge { size, limit }) => {
            let msg = format!(
                "node {node}: eigenvalue group of size {size} exceeds {limit}; using identity and single sign flips"
            );
            log::warn!("{msg}");
            tree.warnings.push(msg);
            Ok(truncated_candidates(g1.len(), g2.len()))
        }
        Err(e) => Err(e),
    }
}

/// Expands an unexplored node: groups the next eigenvalues, enumerates signed
/// permutation blocks, refines each block-diagonal seed and attaches the results
/// (sorted by energy) as unexplored children. Returns the new node ids.
pub fn expand_node(tree: &mut MapTree, node: usize, domains: &PairDomains) -> Result<Vec<usize>> {
    if tree.nodes[node].status != NodeStatus::Unexplored {
        return Err(Error::Validation(format!("node {node} is not unexplored")));
    }
    let blocks = match candidate_blocks(tree, node, domains) {
        Ok(b) => b,
        Err(e @ Error::BasisExhausted { .. }) => {
            let n = &mut tree.nodes[node];
            n.status = NodeStatus::Explored;
            n.terminal = true;
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    let parent = tree.nodes[node].fmap.clone();
    let budget = tree.config.refine_budget;
    let (d1, d2) = (&domains.sampled1, &domains.sampled2);
    let mut candidates: Vec<Candidate> = blocks
        .par_iter()
        .map(|block| -> Result<Candidate> {
            let seed = FunctionalMap {
                matrix: embed_block(&parent.matrix, block),
                source_id: parent.source_id.clone(),
                target_id: parent.target_id.clone(),
            };
            let (fmap, pair) = refine_node(&seed, d1, d2, budget)?;
            let (r, c) = (fmap.rows(), fmap.cols());
            let energies = normalized_energies(&fmap.matrix, &d1.eigenvalues()[..r], &d2.eigenvalues()[..c])?;
            let lead = fmap.matrix.view((0, 0), parent.matrix.shape()).into_owned();
            let parent_deviation = fmap_distance(&lead, &parent.matrix)?;
            Ok(Candidate {
                fmap,
                pair,
                energies,
                parent_deviation,
            })
        })
        .collect::<Result<_>>()?;
    candidates.sort_by(|a, b| (a.energies.0 + a.energies.1).total_cmp(&(b.energies.0 + b.energies.1)));

    tree.nodes[node].status = NodeStatus::Explored;
    let mut ids = Vec::with_capacity(candidates.len());
    for c in candidates {
        let id = tree.nodes.len();
        tree.nodes.push(MapTreeNode {
            id,
            fmap: c.fmap,
            status: NodeStatus::Unexplored,
            parent: Some(node),
            children: Vec::new(),
            energies: c.energies,
            parent_deviation: c.parent_deviation,
            pair: Some(c.pair),
            dense: None,
            terminal: false,
        });
        tree.nodes[node].children.push(id);
        ids.push(id);
    }
    Ok(ids)
}

/// Marks children over either energy threshold as quality-pruned, and children whose
/// sample map matches an earlier live leaf of the same size on at least
/// `dedup_agreement` of the samples.
pub fn prune(tree: &mut MapTree, new_children: &[usize]) {
    let cfg = tree.config.clone();
    for &c in new_children {
        let (eo, el) = tree.nodes[c].energies;
        if !(eo <= cfg.epsilon_ortho && el <= cfg.epsilon_lapcomm) {
            tree.nodes[c].status = NodeStatus::PrunedQuality;
        }
    }
    for &c in new_children {
        if tree.nodes[c].status.is_pruned() {
            continue;
        }
        let dims = tree.nodes[c].dims();
        let mine = tree.nodes[c].pair.as_ref().expect("children carry sample maps");
        let duplicate = tree.nodes[..c].iter().any(|o| {
            o.is_live_leaf()
                && o.dims() == dims
                && o.pair
                    .as_ref()
                    .is_some_and(|p| p.pi_12.agreement(&mine.pi_12) >= cfg.dedup_agreement)
        });
        if duplicate {
            tree.nodes[c].status = NodeStatus::PrunedDuplicate;
        }
    }
    let over = tree.live_leaf_count().saturating_sub(cfg.max_leaves);
    if over > 0 {
        tree.leaf_cap_hit = true;
        let mut dropped = 0;
        for &c in new_children.iter().rev() {
            if dropped == over {
                break;
            }
            if !tree.nodes[c].status.is_pruned() {
                tree.nodes[c].status = NodeStatus::PrunedQuality;
                dropped += 1;
            }
        }
        let msg = format!("live-leaf cap {} reached; dropped {dropped} candidates", cfg.max_leaves);
        log::warn!("{msg}");
        tree.warnings.push(msg);
    }
}

/// Breadth-first expansion until every live leaf exceeds `kappa` or is terminal,
/// followed by the final upsampling of each survivor to dense maps and a last
/// duplicate sweep on those.
pub fn explore(mut tree: MapTree, domains: &PairDomains) -> Result<MapTree> {
    let kappa = tree.config.kappa;
    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    while let Some(id) = queue.pop_front() {
        if tree.nodes[id].status != NodeStatus::Unexplored || tree.nodes[id].size() > kappa {
            continue;
        }
        match expand_node(&mut tree, id, domains) {
            Ok(children) => {
                prune(&mut tree, &children);
                for c in children {
                    if !tree.nodes[c].status.is_pruned() {
                        queue.push_back(c);
                    }
                }
            }
            Err(Error::BasisExhausted { index }) => {
                log::info!("node {id} is terminal: basis exhausted at index {index}");
            }
            Err(e) => return Err(e),
        }
    }
    finalize(&mut tree, domains)?;
    Ok(tree)
}

/// Upsamples every survivor's sample maps to `k_final` and then to dense vertex maps.
/// Dense maps are checked against the energy thresholds again at `k_final` before dedup.
fn finalize(tree: &mut MapTree, domains: &PairDomains) -> Result<()> {
    let leaves = tree.surviving_leaves();
    let k_final = tree.config.k_final.min(domains.kmax());
    let dense: Vec<(usize, MapPair)> = leaves
        .par_iter()
        .map(|&id| -> Result<(usize, MapPair)> {
            let node = &tree.nodes[id];
            let pair = node.pair.clone().expect("leaves carry sample maps");
            Ok((id, densify(&pair, node.size(), k_final, domains)?))
        })
        .collect::<Result<_>>()?;
    let agreement = tree.config.dedup_agreement;
    let (eo, el) = (tree.config.epsilon_ortho, tree.config.epsilon_lapcomm);
    let eigs1 = &domains.full1.eigenvalues()[..k_final];
    let eigs2 = &domains.full2.eigenvalues()[..k_final];
    let mut kept: Vec<usize> = Vec::new();
    for (id, pair) in dense {
        let c = domains.full1.pull_back(&pair.pi_12, &domains.full2, k_final, k_final)?;
        let (e_ortho, e_lap) = normalized_energies(&c, eigs1, eigs2)?;
        if e_ortho > eo || e_lap > el {
            log::debug!("leaf {id} fails the quality gate at k_final: {e_ortho:.3e} {e_lap:.3e}");
            tree.nodes[id].dense = Some(pair);
            tree.nodes[id].status = NodeStatus::PrunedQuality;
            continue;
        }
        let dup = kept.iter().any(|&k| {
            tree.nodes[k]
                .dense
                .as_ref()
                .is_some_and(|p| p.pi_12.agreement(&pair.pi_12) >= agreement)
        });
        tree.nodes[id].dense = Some(pair);
        if dup {
            tree.nodes[id].status = NodeStatus::PrunedDuplicate;
        } else {
            kept.push(id);
        }
    }
    Ok(())
}

const DENSE_STEPS: usize = 8;

/// Sample-level bijective steps from `k_from` up to `k_final`, then mass-weighted
/// bijective steps on the full vertex sets until the pair stops changing (at most
/// `DENSE_STEPS`).
pub fn densify(pair: &MapPair, k_from: usize, k_final: usize, domains: &PairDomains) -> Result<MapPair> {
    let (s1, s2) = (&domains.sampled1, &domains.sampled2);
    let mut cur = pair.clone();
    for k in k_from.min(k_final)..=k_final {
        cur = bijective_step(&cur, s1, s2, k, None)?;
    }
    let c21 = s1.pull_back(&cur.pi_12, s2, k_final, k_final)?;
    let c12 = s2.pull_back(&cur.pi_21, s1, k_final, k_final)?;
    let (f1, f2) = (&domains.full1, &domains.full2);
    let full = MapPair::new(f1.nn_from_fmap(&c21, f2)?, f2.nn_from_fmap(&c12, f1)?)?;
    let masses = (f1.mass().expect("full domain"), f2.mass().expect("full domain"));
    let mut cur = bijective_step(&full, f1, f2, k_final, Some(masses))?;
    for _ in 1..DENSE_STEPS {
        let next = bijective_step(&cur, f1, f2, k_final, Some(masses))?;
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

/// Diagonal sign vector of the leading `kappa` entries.
fn sign_vector(c: &DMatrix<f64>, kappa: usize) -> Vec<i8> {
    (0..kappa).map(|i| if c[(i, i)] >= 0.0 { 1 } else { -1 }).collect()
}

/// Whether the set of leading diagonal sign vectors (length `kappa`) of the surviving
/// leaves equals the set obtained from the known isometries through `pointwise_to_functional`.
///
/// Requires simple spectra: every adjacent gap among the first `kappa + 1` eigenvalues
/// of both shapes must exceed the grouping epsilon.
pub fn theorem2_check(
    tree: &MapTree,
    known_isometries: &[PointwiseMap],
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    kappa: usize,
) -> Result<bool> {
    let eps = tree.config.epsilon_group;
    for (name, b) in [("source", basis1), ("target", basis2)] {
        if b.k() < kappa + 1 {
            return Err(Error::PreconditionViolated(format!("{name} basis holds fewer than {} functions", kappa + 1)));
        }
        if let Some(i) = (1..=kappa).find(|&i| b.eigenvalues[i] - b.eigenvalues[i - 1] < eps) {
            return Err(Error::PreconditionViolated(format!(
                "{name} eigenvalues {} and {} are closer than {eps}",
                i - 1,
                i
            )));
        }
    }
    let mut expected: Vec<Vec<i8>> = known_isometries
        .iter()
        .map(|iso| pointwise_to_functional(iso, basis1, basis2, kappa, kappa).map(|c| sign_vector(&c.matrix, kappa)))
        .collect::<Result<_>>()?;
    let mut found: Vec<Vec<i8>> = Vec::new();
    for id in tree.surviving_leaves() {
        let c = &tree.nodes[id].fmap.matrix;
        if c.nrows() < kappa || c.ncols() < kappa {
            return Ok(false);
        }
        found.push(sign_vector(c, kappa));
    }
    expected.sort();
    expected.dedup();
    found.sort();
    let n_found = found.len();
    found.dedup();
    Ok(found == expected && n_found == found.len())
}
