//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Pass a substring to run a subset.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use maptree::analysis::{distance_matrices, kmeans, mds_embed, random_maps, silhouette, write_landscape_csv, MapEnsemble};
use maptree::fmap::{functional_to_pointwise, pointwise_to_functional, PointwiseMap, SpectralDomain};
use maptree::maptree::{
    densify, enumerate_signed_permutations, explore, init_tree, theorem2_check, ExplorationConfig, MapTree,
    PairDomains,
};
use maptree::mesh::io::write_off;
use maptree::mesh::{default_seed_vertex, farthest_point_sample, geodesic_distances, normalize_to_unit_area};
use maptree::metrics::{accuracy, conformal_distortion, dirichlet_energy, geodesic_distortion};
use maptree::refine::{bijective_zoomout, pair_from_fmap, zoomout, RefineConfig};
use maptree::select::{cycle_energy, select_by_cycles, select_by_cycles_from, Candidate, CandidateSet, PairCandidates};
use maptree::shapes::{self, Diagonal, GridSymmetry};
use maptree::spectral::{build_laplacian, compute_basis, group_eigenvalues, SpectralBasis};
use maptree::TriangleMesh;
use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: maptree::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("library error: {e}"))
}

// ---------------------------------------------------------------------------
// independent oracles

fn heron(a: f64, b: f64, c: f64) -> f64 {
    let s = (a + b + c) / 2.0;
    (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt()
}

fn face_lengths(p: &[Vector3<f64>], f: &[usize; 3]) -> [f64; 3] {
    // length of the edge opposite each corner
    [(p[f[1]] - p[f[2]]).norm(), (p[f[2]] - p[f[0]]).norm(), (p[f[0]] - p[f[1]]).norm()]
}

/// Dense cotangent stiffness from edge lengths (law of cosines + Heron).
fn oracle_stiffness(mesh: &TriangleMesh) -> DMatrix<f64> {
    let n = mesh.num_vertices();
    let p = mesh.positions();
    let mut w = DMatrix::zeros(n, n);
    for f in mesh.faces() {
        let l = face_lengths(p, f);
        let area = heron(l[0], l[1], l[2]);
        for c in 0..3 {
            let (a, b) = (f[(c + 1) % 3], f[(c + 2) % 3]);
            let cot = (l[(c + 1) % 3].powi(2) + l[(c + 2) % 3].powi(2) - l[c].powi(2)) / (4.0 * area);
            w[(a, b)] -= cot / 2.0;
            w[(b, a)] -= cot / 2.0;
            w[(a, a)] += cot / 2.0;
            w[(b, b)] += cot / 2.0;
        }
    }
    w
}

fn oracle_mass(mesh: &TriangleMesh) -> Vec<f64> {
    let p = mesh.positions();
    let mut m = vec![0.0; mesh.num_vertices()];
    for f in mesh.faces() {
        let l = face_lengths(p, f);
        let a = heron(l[0], l[1], l[2]);
        for &v in f {
            m[v] += a / 3.0;
        }
    }
    m
}

/// All-pairs edge-graph distances by Floyd-Warshall, divided by sqrt(area).
fn oracle_geodesics(mesh: &TriangleMesh) -> DMatrix<f64> {
    let n = mesh.num_vertices();
    let p = mesh.positions();
    let mut d = DMatrix::from_element(n, n, f64::INFINITY);
    for i in 0..n {
        d[(i, i)] = 0.0;
    }
    for f in mesh.faces() {
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            let l = (p[a] - p[b]).norm();
            d[(a, b)] = l;
            d[(b, a)] = l;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    let area: f64 = oracle_mass(mesh).iter().sum();
    d / area.sqrt()
}

/// Conformal distortion from first fundamental forms: the squared singular values of
/// the face map are the eigenvalues of G1^-1 G2.
fn oracle_conformal(pmap: &PointwiseMap, m1: &TriangleMesh, m2: &TriangleMesh) -> f64 {
    let (p1, p2) = (m1.positions(), m2.positions());
    let mut sum = 0.0;
    let mut count = 0;
    for f in m1.faces() {
        let g = |p: &[Vector3<f64>], a: usize, b: usize, c: usize| {
            let (u, v) = (p[b] - p[a], p[c] - p[a]);
            Matrix2::new(u.dot(&u), u.dot(&v), u.dot(&v), v.dot(&v))
        };
        let (a, b, c) = (pmap.get(f[0]), pmap.get(f[1]), pmap.get(f[2]));
        let img_cross = (p2[b] - p2[a]).cross(&(p2[c] - p2[a])).norm();
        let longest = [(p2[b] - p2[a]).norm(), (p2[c] - p2[b]).norm(), (p2[a] - p2[c]).norm()]
            .into_iter()
            .fold(0.0f64, f64::max);
        if img_cross <= 1e-12 * longest * longest {
            continue;
        }
        let g1 = g(p1, f[0], f[1], f[2]);
        let g2 = g(p2, a, b, c);
        let m = g1.try_inverse().expect("source face is not degenerate") * g2;
        // eigenvalues of a 2x2 matrix with real positive spectrum
        let (tr, det) = (m.trace(), m.determinant());
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let (s1, s2) = ((tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt());
        sum += s1 / s2 + s2 / s1 - 2.0;
        count += 1;
    }
    sum / count as f64
}

fn oracle_energies(c: &DMatrix<f64>, eig_rows: &[f64], eig_cols: &[f64]) -> (f64, f64) {
    let (r, k) = c.shape();
    let mut ortho = 0.0;
    for i in 0..r {
        for j in 0..r {
            let dot: f64 = (0..k).map(|t| c[(i, t)] * c[(j, t)]).sum();
            ortho += (dot - if i == j { 1.0 } else { 0.0 }).powi(2);
        }
    }
    let mut lap = 0.0;
    for i in 0..r {
        for j in 0..k {
            lap += (c[(i, j)] * eig_cols[j] - eig_rows[i] * c[(i, j)]).powi(2);
        }
    }
    let lmax = eig_rows.iter().chain(eig_cols).fold(0.0f64, |m, v| m.max(v.abs()));
    (ortho / r.max(k) as f64, lap / (lmax * lmax))
}

fn is_edge(mesh: &TriangleMesh, a: usize, b: usize) -> bool {
    mesh.neighbors(a).contains(&b)
}

/// Vertex maps induced by the eight symmetries of the bounding rectangle (about its
/// center, in the xy-plane) that send every vertex onto a vertex and preserve every
/// edge length.
fn brute_force_isometries(mesh: &TriangleMesh) -> Vec<PointwiseMap> {
    let p = mesh.positions();
    let (mut lo, mut hi) = (p[0], p[0]);
    for q in p {
        lo = lo.inf(q);
        hi = hi.sup(q);
    }
    let center = (lo + hi) / 2.0;
    let scale = (hi - lo).norm();
    let key = |v: &Vector3<f64>| {
        let r = |x: f64| (x / scale * 1e7).round() as i64;
        (r(v.x), r(v.y), r(v.z))
    };
    let index: HashMap<_, usize> = p.iter().enumerate().map(|(i, v)| (key(v), i)).collect();
    let transforms: [fn(f64, f64) -> (f64, f64); 8] = [
        |x, y| (x, y),
        |x, y| (-x, y),
        |x, y| (x, -y),
        |x, y| (-x, -y),
        |x, y| (y, x),
        |x, y| (-y, x),
        |x, y| (y, -x),
        |x, y| (-y, -x),
    ];
    let mut out = Vec::new();
    for t in transforms {
        let targets: Option<Vec<usize>> = p
            .iter()
            .map(|v| {
                let (x, y) = t(v.x - center.x, v.y - center.y);
                index.get(&key(&Vector3::new(x + center.x, y + center.y, v.z))).copied()
            })
            .collect();
        let Some(targets) = targets else { continue };
        let preserves = mesh.edges().iter().all(|&(a, b)| {
            let (ta, tb) = (targets[a], targets[b]);
            is_edge(mesh, ta, tb) && (mesh.edge_length(a, b) - mesh.edge_length(ta, tb)).abs() < 1e-9
        });
        if preserves {
            out.push(PointwiseMap::new(targets, p.len()).expect("valid map"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// shared fixtures

struct Explored {
    name: &'static str,
    tree: MapTree,
    basis1: SpectralBasis,
    basis2: SpectralBasis,
    seconds: f64,
}

static TREES: Mutex<Vec<Explored>> = Mutex::new(Vec::new());

fn explore_pair(name: &'static str, m1: &TriangleMesh, m2: &TriangleMesh) -> Result<(), String> {
    let t = Instant::now();
    let cfg = ExplorationConfig::default();
    let k = cfg.basis_size().min(m1.num_vertices()).min(m2.num_vertices());
    let b1 = lib(compute_basis(&lib(build_laplacian(m1))?, k))?;
    let b2 = lib(compute_basis(&lib(build_laplacian(m2))?, k))?;
    let count = cfg.sample_count.min(m1.num_vertices()).min(m2.num_vertices());
    let cfg = ExplorationConfig { k_final: cfg.k_final.min(k), sample_count: count, ..cfg };
    let s1 = lib(farthest_point_sample(m1, count, default_seed_vertex(m1)))?;
    let s2 = lib(farthest_point_sample(m2, count, default_seed_vertex(m2)))?;
    let domains = PairDomains::new(&b1, &b2, &s1, &s2);
    let tree = lib(explore(lib(init_tree(&b1, &b2, cfg))?, &domains))?;
    TREES.lock().unwrap().push(Explored { name, tree, basis1: b1, basis2: b2, seconds: t.elapsed().as_secs_f64() });
    Ok(())
}

fn take_tree<R>(name: &str, f: impl FnOnce(&Explored) -> R) -> R {
    let trees = TREES.lock().unwrap();
    f(trees.iter().find(|e| e.name == name).expect("fixture explored earlier"))
}

fn dense_maps(tree: &MapTree) -> Vec<PointwiseMap> {
    tree.surviving_leaves()
        .iter()
        .map(|&id| tree.nodes[id].dense.as_ref().expect("dense map").pi_12.clone())
        .collect()
}

/// Greedy one-to-one matching of found maps to expected ones at >= 95% agreement.
fn matched(found: &[PointwiseMap], expected: &[PointwiseMap]) -> usize {
    let mut used = vec![false; expected.len()];
    let mut n = 0;
    for f in found {
        if let Some(j) = (0..expected.len()).find(|&j| !used[j] && f.agreement(&expected[j]) >= 0.95) {
            used[j] = true;
            n += 1;
        }
    }
    n
}

fn trapezoid_pair() -> (TriangleMesh, TriangleMesh) {
    let flat = shapes::trapezoid(20, 16, 0.4);
    let bent = shapes::bend_y(&flat, 0.8);
    (normalize_to_unit_area(&flat), normalize_to_unit_area(&bent))
}

// ---------------------------------------------------------------------------
// criteria

fn c1_spectrum() -> Outcome {
    let t = Instant::now();
    let mesh = shapes::grid(40, 20, 2.0, 1.0, Diagonal::Alternating);
    let lap = lib(build_laplacian(&mesh))?;
    let basis = lib(compute_basis(&lap, 10))?;
    let secs = t.elapsed().as_secs_f64();
    // Neumann modes of a 2 x 1 rectangle: (pi/2)^2 and pi^2
    let ratio = basis.eigenvalues[1] / basis.eigenvalues[2];
    let ratio_err = (ratio - 0.25).abs() / 0.25;

    let w = oracle_stiffness(&mesh);
    let m = DVector::from_vec(oracle_mass(&mesh));
    let phi = &basis.eigenfunctions;
    let gram = phi.transpose() * DMatrix::from_diagonal(&m) * phi;
    let ortho = (gram - DMatrix::identity(10, 10)).norm();
    let residual = (0..10)
        .map(|i| {
            let v = phi.column(i);
            let mv = v.component_mul(&m);
            (&w * v - &mv * basis.eigenvalues[i]).norm() / mv.norm()
        })
        .fold(0.0f64, f64::max);
    check(
        ratio_err < 0.10 && ortho < 1e-5 && residual < 1e-6 && secs < 10.0,
        format!("ratio {ratio:.4} (err {:.2}%), ortho {ortho:.1e}, residual {residual:.1e}, {secs:.2}s", 100.0 * ratio_err),
    )
}

fn c2_round_trip() -> Outcome {
    let t = Instant::now();
    // an arbitrary relabelling: vertex v of the mesh is vertex inv[v] of the copy
    let mesh = shapes::irregular_patch(9, 4, 1);
    let n = mesh.num_vertices();
    let order = shapes::random_permutation(n, 7);
    let copy = lib(mesh.permuted(&order))?;
    let b1 = lib(compute_basis(&lib(build_laplacian(&mesh))?, n))?;
    let b2 = lib(compute_basis(&lib(build_laplacian(&copy))?, n))?;
    let pmap = lib(PointwiseMap::new(shapes::invert_permutation(&order), n))?;
    let c = lib(pointwise_to_functional(&pmap, &b1, &b2, n, n))?;
    let back = lib(functional_to_pointwise(&c, &b1, &b2, None))?;
    let mismatches = (0..n).filter(|&v| back.get(v) != pmap.get(v)).count();
    let secs = t.elapsed().as_secs_f64();
    check(n == 50 && mismatches == 0 && secs < 5.0, format!("{n} vertices, {mismatches} mismatches, {secs:.2}s"))
}

fn c3_plancherel() -> Outcome {
    let mesh = shapes::grid(10, 8, 1.25, 1.0, Diagonal::Alternating);
    let n = mesh.num_vertices();
    let basis = lib(compute_basis(&lib(build_laplacian(&mesh))?, n))?;
    let m = oracle_mass(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t1 = lib(PointwiseMap::new((0..n).map(|_| rng.gen_range(0..n)).collect(), n))?;
        let t2 = lib(PointwiseMap::new((0..n).map(|_| rng.gen_range(0..n)).collect(), n))?;
        let c1 = lib(pointwise_to_functional(&t1, &basis, &basis, n, n))?.matrix;
        let c2 = lib(pointwise_to_functional(&t2, &basis, &basis, n, n))?.matrix;
        for i in 0..n {
            let lhs = (c1.column(i) - c2.column(i)).norm_squared();
            let phi = basis.eigenfunctions.column(i);
            let rhs: f64 = (0..n).map(|v| m[v] * (phi[t1.get(v)] - phi[t2.get(v)]).powi(2)).sum();
            worst = worst.max((lhs - rhs).abs() / rhs.max(f64::EPSILON));
        }
    }
    check(worst < 1e-8, format!("20 map pairs x {n} columns, worst relative gap {worst:.1e}"))
}

fn c4_lower_bound() -> Outcome {
    let mesh = shapes::grid(20, 20, 1.0, 1.0, Diagonal::Alternating);
    let n = mesh.num_vertices();
    let basis = lib(compute_basis(&lib(build_laplacian(&mesh))?, 40))?;
    let m = oracle_mass(&mesh);
    let reflection = lib(PointwiseMap::new(shapes::grid_symmetry(20, 20, GridSymmetry::MirrorX), n))?;
    let identity = PointwiseMap::identity(n);
    if (0..n).any(|v| (m[reflection.get(v)] - m[v]).abs() > 1e-12) {
        return Err("reflection does not preserve the vertex masses".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let regions: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let (x0, y0) = (rng.gen_range(0.0..0.7), rng.gen_range(0.0..0.7));
            let (x1, y1) = (x0 + rng.gen_range(0.1..0.3), y0 + rng.gen_range(0.1..0.3));
            mesh.positions()
                .iter()
                .map(|p| if p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let m_norm2 = |f: &[f64]| -> f64 { f.iter().zip(&m).map(|(a, w)| a * a * w).sum() };
    // squared M-norm of the part of f outside span(phi_0..phi_k)
    let residual2 = |f: &[f64], k: usize| -> f64 {
        let phi = basis.phi(k);
        let fm: DVector<f64> = DVector::from_iterator(n, f.iter().zip(&m).map(|(a, w)| a * w));
        let coef = phi.transpose() * fm;
        let proj = &phi * coef;
        let r: Vec<f64> = f.iter().zip(proj.iter()).map(|(a, b)| a - b).collect();
        m_norm2(&r)
    };
    let mut worst_margin = f64::INFINITY;
    let mut tested = 0;
    for k in [10, 20, 40] {
        let c1 = lib(pointwise_to_functional(&identity, &basis, &basis, k, k))?.matrix;
        let c2 = lib(pointwise_to_functional(&reflection, &basis, &basis, k, k))?.matrix;
        let lhs = (c1 - c2).norm();
        for ind in &regions {
            let area = m_norm2(ind);
            let eps = residual2(ind, k) / area;
            let g: Vec<f64> = (0..n).map(|v| ind[identity.get(v)] - ind[reflection.get(v)]).collect();
            let sym_diff = m_norm2(&g);
            if sym_diff == 0.0 {
                continue;
            }
            let delta = residual2(&g, k) / sym_diff;
            let bound = sym_diff.sqrt() * (1.0 - delta.sqrt()) / area.sqrt() - 2.0 * eps.sqrt();
            worst_margin = worst_margin.min(lhs - bound);
            tested += 1;
        }
    }
    check(
        worst_margin >= -1e-12 && tested > 0,
        format!("{tested} (region, k) cases, smallest margin ||C1-C2|| - bound = {worst_margin:.3e}"),
    )
}

fn c5_self_map_recovery() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    let fixtures = [
        ("rectangle", normalize_to_unit_area(&shapes::rectangle(36, 30, 1.22)), 4usize),
        ("asymmetric", normalize_to_unit_area(&shapes::irregular_patch(36, 30, 2)), 1),
    ];
    for (name, mesh, expected) in fixtures {
        let isos = brute_force_isometries(&mesh);
        explore_pair(name, &mesh, &mesh)?;
        let (found, hits, thm, secs) = take_tree(name, |e| {
            let maps = dense_maps(&e.tree);
            let thm = theorem2_check(&e.tree, &isos, &e.basis1, &e.basis2, e.tree.config.kappa);
            (maps.len(), matched(&maps, &isos), thm, e.seconds)
        });
        let thm = lib(thm)?;
        ok &= isos.len() == expected && found == expected && hits == expected && thm && secs < 60.0;
        details.push(format!(
            "{name}: {} isometries, {found} leaves, {hits} matched, sign check {thm}, {secs:.1}s",
            isos.len()
        ));
    }
    check(ok, details.join("; "))
}

fn c6_repeated_eigenvalues() -> Outcome {
    let mesh = normalize_to_unit_area(&shapes::grid(20, 20, 1.0, 1.0, Diagonal::Alternating));
    let isos = brute_force_isometries(&mesh);
    let candidates = lib(enumerate_signed_permutations(2, 2, 3))?.len();
    explore_pair("square", &mesh, &mesh)?;
    let (group, distinct, leaves, secs) = take_tree("square", |e| {
        let group = group_eigenvalues(&e.basis1.eigenvalues, 1, e.tree.config.epsilon_group);
        let maps = dense_maps(&e.tree);
        (group, matched(&maps, &isos), maps.len(), e.seconds)
    });
    check(
        isos.len() == 8 && group == (1..3) && candidates == 8 && distinct >= 4 && secs < 120.0,
        format!(
            "{} grid isometries, lambda group {group:?}, {candidates} candidates, {leaves} leaves covering {distinct} isometries, {secs:.1}s",
            isos.len()
        ),
    )
}

fn c7_bijective_zoomout() -> Outcome {
    let t = Instant::now();
    let mesh = shapes::bumpy_grid(100, 50, 7);
    let n = mesh.num_vertices();
    let order = shapes::random_permutation(n, 17);
    let copy = lib(mesh.permuted(&order))?;
    let truth = lib(PointwiseMap::new(shapes::invert_permutation(&order), n))?;
    let cfg = RefineConfig { k_init: 5, k_step: 1, k_final: 50, sample_count: 300 };
    let b1 = lib(compute_basis(&lib(build_laplacian(&mesh))?, cfg.k_final))?;
    let b2 = lib(compute_basis(&lib(build_laplacian(&copy))?, cfg.k_final))?;
    let s1 = lib(farthest_point_sample(&mesh, cfg.sample_count, default_seed_vertex(&mesh)))?;
    let s2 = lib(farthest_point_sample(&copy, cfg.sample_count, default_seed_vertex(&copy)))?;
    let domains = PairDomains::new(&b1, &b2, &s1, &s2);

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut corrupted = truth.targets().to_vec();
    let mut picked: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(picked.as_mut_slice(), &mut rng);
    for &v in &picked[..n / 5] {
        corrupted[v] = rng.gen_range(0..n);
    }
    let corrupted = lib(PointwiseMap::new(corrupted, n))?;
    let setup = t.elapsed().as_secs_f64();

    let run = |init: &PointwiseMap| -> Result<(f64, f64), String> {
        let t = Instant::now();
        let c21 = lib(domains.full1.pull_back(init, &domains.full2, cfg.k_init, cfg.k_init))?;
        let pair = lib(pair_from_fmap(&c21, &domains.sampled1, &domains.sampled2))?;
        let pair = lib(bijective_zoomout(&pair, &domains.sampled1, &domains.sampled2, &cfg))?;
        let dense = lib(densify(&pair, cfg.k_final, cfg.k_final, &domains))?;
        let exact = s1.iter().filter(|&&v| dense.pi_12.get(v) == truth.get(v)).count();
        Ok((exact as f64 / s1.len() as f64, t.elapsed().as_secs_f64()))
    };
    let (from_noise, t_noise) = run(&corrupted)?;
    let (from_truth, t_truth) = run(&truth)?;
    check(
        n == 5151 && from_noise >= 0.95 && from_truth >= 0.99 && setup + t_noise < 30.0,
        format!(
            "{n} vertices: corrupted init {:.1}% ({t_noise:.1}s), ground-truth init {:.1}% ({t_truth:.1}s), setup {setup:.1}s",
            100.0 * from_noise,
            100.0 * from_truth
        ),
    )
}

fn c8_multi_solution() -> Outcome {
    let (flat, bent) = trapezoid_pair();
    let n = flat.num_vertices();
    let stretch = flat
        .edges()
        .iter()
        .map(|&(a, b)| (bent.edge_length(a, b) / flat.edge_length(a, b) - 1.0).abs())
        .fold(0.0f64, f64::max);
    let isos = brute_force_isometries(&flat);
    let direct = PointwiseMap::identity(n);
    let Some(mirror) = isos.iter().find(|p| p.agreement(&direct) < 0.5).cloned() else {
        return Err("flat trapezoid has no reflection".into());
    };
    explore_pair("trapezoid", &flat, &bent)?;
    let maps = take_tree("trapezoid", |e| dense_maps(&e.tree));
    let all: Vec<usize> = (0..n).collect();
    let geo = lib(geodesic_distances(&bent, &all))?;
    let best = |gt: &PointwiseMap| -> Result<f64, String> {
        maps.iter()
            .map(|m| lib(accuracy(m, gt, &geo)))
            .try_fold(f64::INFINITY, |b, a| a.map(|a| b.min(a)))
    };
    let (acc_direct, acc_mirror) = (best(&direct)?, best(&mirror)?);
    check(
        stretch <= 0.02 && maps.len() >= 2 && acc_direct < 0.02 && acc_mirror < 0.02,
        format!(
            "max edge stretch {:.2}%, {} maps, best accuracy direct {acc_direct:.4}, mirrored {acc_mirror:.4}",
            100.0 * stretch,
            maps.len()
        ),
    )
}

fn c9_pruning() -> Outcome {
    let trees = TREES.lock().unwrap();
    if trees.is_empty() {
        return Err("no explored fixtures".into());
    }
    let mut ok = true;
    let mut details = Vec::new();
    for e in trees.iter() {
        let tree = &e.tree;
        let leaves = tree.surviving_leaves();
        let mut worst = (0.0f64, 0.0f64);
        for &id in &leaves {
            let c = &tree.nodes[id].fmap.matrix;
            let (r, k) = c.shape();
            let (eo, el) = oracle_energies(c, &e.basis1.eigenvalues[..r], &e.basis2.eigenvalues[..k]);
            worst = (worst.0.max(eo), worst.1.max(el));
        }
        let mut dup = 0;
        for (i, &a) in leaves.iter().enumerate() {
            for &b in &leaves[i + 1..] {
                let (na, nb) = (&tree.nodes[a], &tree.nodes[b]);
                let (pa, pb) = (na.pair.as_ref().unwrap(), nb.pair.as_ref().unwrap());
                let same = (0..pa.pi_12.domain_size()).filter(|&v| pa.pi_12.get(v) == pb.pi_12.get(v)).count();
                if na.dims() == nb.dims() && same as f64 >= 0.95 * pa.pi_12.domain_size() as f64 {
                    dup += 1;
                }
            }
        }
        ok &= worst.0 <= 0.5 && worst.1 <= 0.5 && dup == 0;
        details.push(format!("{}: {} leaves, max E_ortho {:.3}, max E_lapComm {:.3}, {dup} duplicates", e.name, leaves.len(), worst.0, worst.1));
    }
    check(ok, details.join("; "))
}

fn c10_cycle_selection() -> Outcome {
    let (nx, ny, k) = (30, 20, 20);
    let mesh = shapes::rectangle(nx, ny, 1.5);
    let n = mesh.num_vertices();
    let basis = lib(compute_basis(&lib(build_laplacian(&mesh))?, k))?;
    let refl = lib(PointwiseMap::new(shapes::grid_symmetry(nx, ny, GridSymmetry::MirrorX), n))?;
    let c_id = lib(pointwise_to_functional(&PointwiseMap::identity(n), &basis, &basis, k, k))?.matrix;
    let c_refl = lib(pointwise_to_functional(&refl, &basis, &basis, k, k))?.matrix;
    let options = [c_id, c_refl];
    let pairs = [(0, 1), (1, 2), (0, 2)]
        .iter()
        .map(|&(a, b)| PairCandidates {
            a,
            b,
            candidates: options.iter().map(|c| Candidate { fmap: c.clone(), orientation_flip: 0.0 }).collect(),
        })
        .collect();
    let set = lib(CandidateSet::new(pairs))?;
    let triplets = [[0, 1, 2]];
    let total = |choice: &[usize]| -> Result<f64, String> {
        (0..3)
            .map(|p| lib(cycle_energy(&set, p, &set.pairs()[p].candidates[choice[p]].fmap, choice, &triplets)))
            .sum()
    };
    // exhaustive search over all 8 assignments; the zero-energy ones are those whose
    // compositions close up: C_01 C_12 = C_02
    let assignments: Vec<Vec<usize>> = (0..8).map(|b| (0..3).map(|i| (b >> i) & 1).collect()).collect();
    let consistent = |ch: &[usize]| -> bool {
        let c = |p: usize| &set.pairs()[p].candidates[ch[p]].fmap;
        let (i01, i12, i02) = (
            set.pairs().iter().position(|p| (p.a, p.b) == (0, 1)).unwrap(),
            set.pairs().iter().position(|p| (p.a, p.b) == (1, 2)).unwrap(),
            set.pairs().iter().position(|p| (p.a, p.b) == (0, 2)).unwrap(),
        );
        (c(i01) * c(i12) - c(i02)).norm() < 1e-6
    };
    let optimal: Vec<&Vec<usize>> = assignments.iter().filter(|a| consistent(a)).collect();
    let mut min_total = f64::INFINITY;
    for a in &assignments {
        min_total = min_total.min(total(a)?);
    }
    let mut worst_sweeps = 0;
    let mut ok = !optimal.is_empty() && min_total < 1e-8;
    let mut starts = vec![None];
    starts.extend(assignments.iter().cloned().map(Some));
    for start in starts {
        let r = match start {
            None => lib(select_by_cycles(&set, &triplets, 5))?,
            Some(init) => lib(select_by_cycles_from(&set, &triplets, init, 5))?,
        };
        worst_sweeps = worst_sweeps.max(r.sweeps);
        ok &= r.converged && r.sweeps <= 3 && optimal.contains(&&r.chosen) && total(&r.chosen)? < 1e-8;
    }
    check(
        ok,
        format!(
            "{} of 8 assignments consistent, exhaustive minimum {min_total:.1e}; all 9 starts reach one within {worst_sweeps} sweeps",
            optimal.len()
        ),
    )
}

fn c11_metric_oracles() -> Outcome {
    let m1 = shapes::irregular_patch(12, 10, 4);
    let m2 = shapes::bumpy_grid(12, 10, 5);
    let n = m1.num_vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pmap = lib(PointwiseMap::new((0..n).map(|_| rng.gen_range(0..n)).collect(), n))?;
    let gt = lib(PointwiseMap::new(shapes::random_permutation(n, 5), n))?;
    let identity = PointwiseMap::identity(n);
    let all: Vec<usize> = (0..n).collect();
    let samples = lib(farthest_point_sample(&m1, 40, default_seed_vertex(&m1)))?;
    let (g1, g2) = (oracle_geodesics(&m1), oracle_geodesics(&m2));
    let geo1 = lib(geodesic_distances(&m1, &samples))?;
    let geo2 = lib(geodesic_distances(&m2, &all))?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);

    let acc = lib(accuracy(&pmap, &gt, &geo2))?;
    let acc_o = (0..n).map(|v| g2[(pmap.get(v), gt.get(v))]).sum::<f64>() / n as f64;

    let dist = lib(geodesic_distortion(&pmap, &geo1, &geo2, &samples))?;
    let mut dist_o = 0.0;
    for &i in &samples {
        for &j in &samples {
            if i != j {
                dist_o += (g1[(i, j)] - g2[(pmap.get(i), pmap.get(j))]).powi(2);
            }
        }
    }
    dist_o /= (samples.len() * (samples.len() - 1)) as f64;

    let dir = lib(dirichlet_energy(&pmap, &lib(build_laplacian(&m1))?, m2.positions()))?;
    let w = oracle_stiffness(&m1);
    let dir_o: f64 = (0..3)
        .map(|axis| {
            let x = DVector::from_iterator(n, (0..n).map(|v| m2.positions()[pmap.get(v)][axis]));
            x.dot(&(&w * &x))
        })
        .sum();

    let conf = lib(conformal_distortion(&identity, &m1, &m2))?;
    let conf_o = oracle_conformal(&identity, &m1, &m2);

    let square = shapes::grid(6, 6, 1.0, 1.0, Diagonal::Alternating);
    let stretched =
        lib(square.with_positions(square.positions().iter().map(|p| Vector3::new(2.0 * p.x, p.y, p.z)).collect()))?;
    let stretch = lib(conformal_distortion(&PointwiseMap::identity(square.num_vertices()), &square, &stretched))?;

    let errs = [rel(acc, acc_o), rel(dist, dist_o), rel(dir, dir_o), rel(conf, conf_o)];
    check(
        n <= 200 && errs.iter().all(|&e| e < 1e-8) && (stretch - 0.5).abs() < 1e-12,
        format!(
            "{n} vertices; relative gaps accuracy {:.1e}, distortion {:.1e}, dirichlet {:.1e}, conformal {:.1e}; x2 stretch {stretch:.15}",
            errs[0], errs[1], errs[2], errs[3]
        ),
    )
}

fn c12_landscape() -> Outcome {
    let (nx, ny) = (20, 14);
    let mesh = normalize_to_unit_area(&shapes::rectangle(nx, ny, 1.5));
    let n = mesh.num_vertices();
    let basis = lib(compute_basis(&lib(build_laplacian(&mesh))?, 20))?;
    let domain = SpectralDomain::full(&basis);
    let cfg = RefineConfig { k_init: 3, k_step: 1, k_final: 20, sample_count: n };

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let refl = lib(PointwiseMap::new(shapes::grid_symmetry(nx, ny, GridSymmetry::MirrorX), n))?;
    let mut basin = |center: &PointwiseMap| -> Result<Vec<PointwiseMap>, String> {
        (0..50)
            .map(|_| {
                let t: Vec<usize> = (0..n).map(|v| if rng.gen_bool(0.3) { rng.gen_range(0..n) } else { center.get(v) }).collect();
                lib(PointwiseMap::new(t, n))
            })
            .collect()
    };
    let id_seeds = basin(&PointwiseMap::identity(n))?;
    let refl_seeds = basin(&refl)?;
    let random = lib(random_maps(n, n, 1000, 12))?;

    let mut refined = Vec::with_capacity(1100);
    for p in random.maps.iter().chain(&id_seeds).chain(&refl_seeds) {
        refined.push(lib(zoomout(p, &domain, &domain, &cfg))?);
    }
    let ensemble = lib(MapEnsemble::new(refined))?;
    let all: Vec<usize> = (0..n).collect();
    let geo = lib(geodesic_distances(&mesh, &all))?;
    let (mean, _) = lib(distance_matrices(&ensemble, &geo))?;
    let mut land = lib(mds_embed(&mean))?;
    let clusters = lib(kmeans(&land.coordinates, 4, 0))?;
    land.cluster_ids = Some(clusters);

    let basins = DMatrix::from_fn(100, 100, |i, j| mean[(1000 + i, 1000 + j)]);
    let labels: Vec<usize> = (0..100).map(|i| i / 50).collect();
    let sil = lib(silhouette(&basins, &labels))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("landscape.csv");
    lib(write_landscape_csv(&path, &land, None))?;
    let mut reader = csv::Reader::from_path(&path).map_err(|e| e.to_string())?;
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rec[1].parse::<f64>().map_err(|e| e.to_string())?;
        rec[2].parse::<f64>().map_err(|e| e.to_string())?;
        rows += 1;
    }
    check(
        sil > 0.5 && rows == 1100 && &header[1] == "x" && &header[2] == "y",
        format!("basin silhouette {sil:.3}, stress {:.3}, csv {rows} rows with columns {:?}", land.stress, header),
    )
}

fn c13_reproducible() -> Outcome {
    let (flat, bent) = trapezoid_pair();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("flat.off"), dir.path().join("bent.off"));
    lib(write_off(&a, &flat))?;
    lib(write_off(&b, &bent))?;
    let bin = env!("CARGO_BIN_EXE_maptree");
    for run in ["run1", "run2"] {
        let status = Command::new(bin)
            .arg("explore")
            .arg(&a)
            .arg(&b)
            .arg("--out")
            .arg(dir.path().join(run))
            .env_remove("MAPTREE_CACHE_DIR")
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("{run} exited with {status}"));
        }
    }
    let files = |root: &Path| -> Vec<String> {
        let mut out = vec!["manifest.json".to_string(), "tree.json".to_string()];
        let mut maps: Vec<String> = std::fs::read_dir(root.join("maps"))
            .map(|d| d.filter_map(|e| e.ok()).map(|e| format!("maps/{}", e.file_name().to_string_lossy())).collect())
            .unwrap_or_default();
        maps.sort();
        out.extend(maps);
        out
    };
    let (r1, r2) = (dir.path().join("run1"), dir.path().join("run2"));
    let list = files(&r1);
    let same_list = list == files(&r2);
    let differing: Vec<&String> = list
        .iter()
        .filter(|f| std::fs::read(r1.join(f)).ok() != std::fs::read(r2.join(f)).ok())
        .collect();
    check(
        same_list && differing.is_empty() && list.len() > 2,
        format!("{} files compared, differing: {differing:?}", list.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("spectral correctness", c1_spectrum),
        ("pointwise/functional round trip", c2_round_trip),
        ("plancherel identity", c3_plancherel),
        ("region lower bound", c4_lower_bound),
        ("self-map recovery", c5_self_map_recovery),
        ("repeated eigenvalues", c6_repeated_eigenvalues),
        ("bijective zoomout robustness", c7_bijective_zoomout),
        ("multi-solution pair", c8_multi_solution),
        ("pruning soundness", c9_pruning),
        ("cycle-consistency selection", c10_cycle_selection),
        ("metric oracles", c11_metric_oracles),
        ("landscape", c12_landscape),
        ("reproducibility", c13_reproducible),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2} {name}", i + 1);
        if !filters.is_empty() && !filters.iter().any(|p| label.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("{label}: PASS [{secs:.1}s] {d}"),
            Err(d) => {
                failed += 1;
                println!("{label}: FAIL [{secs:.1}s] {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
