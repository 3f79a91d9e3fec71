use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::{Mode, RunConfig};
use crate::analysis::{distance_matrices, kmeans, mds_embed, random_maps, silhouette, write_landscape_csv};
use crate::error::{Error, Result};
use crate::fmap::{read_fmap_json, read_pointwise_text, write_pointwise_text, PointwiseMap, SpectralDomain};
use crate::maptree::{densify, explore, init_tree, ExplorationConfig, MapTree, PairDomains};
use crate::mesh::io::{coordinate_colors, transfer_colors, write_ply};
use crate::mesh::{
    connected_components, default_seed_vertex, farthest_point_sample, geodesic_distances, load_mesh,
    normalize_to_unit_area,
};
use crate::metrics::{accuracy, quality_report, PairContext, QualityReport};
use crate::refine::{bijective_zoomout_logged, energy_log_csv, pair_from_fmap, zoomout, RefineConfig};
use crate::select::{
    extract_symmetric_region, select_by_cycles, select_self_symmetry, Candidate, CandidateSet, PairCandidates,
    DEFAULT_MAX_SWEEPS, DEFAULT_REGION_THRESHOLD, DEFAULT_SELECTION_SIZE, DEFAULT_SYMMETRY_THRESHOLD,
};
use crate::spectral::{build_laplacian, cache_dir_from_env, compute_basis_cached, LaplacianPair, SpectralBasis};
use crate::TriangleMesh;

/// Symmetric-region extraction needs all-pairs distances; skipped above this size.
const REGION_VERTEX_LIMIT: usize = 3000;

/// One output map of a run.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestMap {
    /// Tree node the map came from, when produced by exploration.
    pub leaf: Option<usize>,
    pub map_file: String,
    pub report_file: String,
    pub report: QualityReport,
}

/// Summary written to `manifest.json`. Timings go to a separate `timing.json` so
/// repeated runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub status: String,
    pub config: Value,
    pub shapes: Vec<Value>,
    pub maps: Vec<ManifestMap>,
    pub tree_file: Option<String>,
    pub timing_file: String,
    pub warnings: Vec<String>,
    /// Mode-specific results (symmetry choice, selection, landscape statistics, ...).
    pub extra: Value,
    #[serde(skip)]
    pub timing: Vec<(String, f64)>,
}

struct Stage {
    name: &'static str,
    timing: Vec<(String, f64)>,
    started: Instant,
}

impl Stage {
    fn new() -> Self {
        Stage { name: "start", timing: Vec::new(), started: Instant::now() }
    }

    fn enter(&mut self, name: &'static str) {
        self.close();
        self.name = name;
    }

    fn close(&mut self) {
        let elapsed = self.started.elapsed().as_secs_f64();
        if self.name != "start" {
            match self.timing.iter_mut().find(|(n, _)| n == self.name) {
                Some(entry) => entry.1 += elapsed,
                None => self.timing.push((self.name.to_string(), elapsed)),
            }
        }
        self.started = Instant::now();
    }
}

/// Runs one subcommand. Outputs are assembled in a staging directory and moved into
/// `cfg.out` only on success; a failure leaves just a failure manifest.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    let work = || -> std::result::Result<RunManifest, (&'static str, Error)> {
        let mut stage = Stage::new();
        let staging = cfg.out.join(".staging");
        let result = prepare_dir(&staging)
            .map_err(|e| ("output", e))
            .and_then(|_| dispatch(cfg, &staging, &mut stage).map_err(|e| (stage.name, e)));
        match result {
            Ok(mut manifest) => {
                stage.close();
                manifest.timing = stage.timing;
                finish(cfg, &staging, &manifest).map_err(|e| ("output", e))?;
                Ok(manifest)
            }
            Err(e) => {
                let _ = fs::remove_dir_all(&staging);
                Err(e)
            }
        }
    };
    let outcome = match cfg.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(("start", Error::Validation(format!("thread pool: {e}")))),
        },
        None => work(),
    };
    outcome.map_err(|(operation, e)| {
        if let Err(w) = write_failure_manifest(cfg, operation, &e) {
            log::error!("could not write failure manifest: {w}");
        }
        e
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `manifest.json` describing a failed run.
pub fn write_failure_manifest(cfg: &RunConfig, operation: &str, err: &Error) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let value = json!({
        "status": "failed",
        "config": cfg.snapshot(),
        "error": {
            "module": err.module(),
            "operation": operation,
            "message": err.to_string(),
            "exit_code": err.exit_code(),
        },
    });
    write_json(&cfg.out.join("manifest.json"), &value)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn finish(cfg: &RunConfig, staging: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(&staging.join("manifest.json"), manifest)?;
    let timing: serde_json::Map<String, Value> =
        manifest.timing.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    write_json(&staging.join(&manifest.timing_file), &timing)?;
    for entry in fs::read_dir(staging).map_err(|e| Error::io(staging, e))? {
        let entry = entry.map_err(|e| Error::io(staging, e))?;
        let dest = cfg.out.join(entry.file_name());
        if dest.is_dir() {
            fs::remove_dir_all(&dest).map_err(|e| Error::io(&dest, e))?;
        }
        fs::rename(entry.path(), &dest).map_err(|e| Error::io(&dest, e))?;
    }
    fs::remove_dir(staging).map_err(|e| Error::io(staging, e))
}

fn dispatch(cfg: &RunConfig, dir: &Path, stage: &mut Stage) -> Result<RunManifest> {
    let mut manifest = RunManifest {
        status: "ok".into(),
        config: cfg.snapshot(),
        shapes: Vec::new(),
        maps: Vec::new(),
        tree_file: None,
        timing_file: "timing.json".into(),
        warnings: Vec::new(),
        extra: Value::Null,
        timing: Vec::new(),
    };
    match cfg.mode {
        Mode::Pair => run_pair(cfg, dir, stage, &mut manifest)?,
        Mode::SelfSym => run_selfsym(cfg, dir, stage, &mut manifest)?,
        Mode::Components => run_components(cfg, dir, stage, &mut manifest)?,
        Mode::Refine => run_refine(cfg, dir, stage, &mut manifest)?,
        Mode::Metrics => run_metrics(cfg, dir, stage, &mut manifest)?,
        Mode::Select => run_select(cfg, dir, stage, &mut manifest)?,
        Mode::Landscape => run_landscape(cfg, dir, stage, &mut manifest)?,
    }
    Ok(manifest)
}

/// A loaded, unit-area mesh with its spectral data and FPS samples.
struct Shape {
    id: String,
    mesh: TriangleMesh,
    laplacian: LaplacianPair,
    basis: SpectralBasis,
    samples: Vec<usize>,
}

impl Shape {
    fn describe(&self, path: &str) -> Value {
        json!({
            "path": path,
            "id": self.id,
            "vertices": self.mesh.num_vertices(),
            "faces": self.mesh.num_faces(),
        })
    }
}

fn load(path: &Path, stage: &mut Stage) -> Result<TriangleMesh> {
    stage.enter("load");
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "input not found")));
    }
    load_mesh(path, None)
}

fn prepare(mesh: TriangleMesh, k: usize, samples: usize, stage: &mut Stage) -> Result<Shape> {
    stage.enter("spectral");
    let mesh = normalize_to_unit_area(&mesh);
    let n = mesh.num_vertices();
    let laplacian = build_laplacian(&mesh)?;
    let cache = cache_dir_from_env();
    let basis = compute_basis_cached(&mesh, &laplacian, k.min(n), cache.as_deref())?;
    stage.enter("sampling");
    let samples = farthest_point_sample(&mesh, samples.min(n), default_seed_vertex(&mesh))?;
    Ok(Shape { id: mesh.content_hash(), mesh, laplacian, basis, samples })
}

/// Exploration settings clamped to what the two shapes can support.
fn clamp_exploration(cfg: &ExplorationConfig, s1: &Shape, s2: &Shape) -> ExplorationConfig {
    let mut c = cfg.clone();
    c.k_final = c.k_final.min(s1.basis.k()).min(s2.basis.k());
    c.sample_count = s1.samples.len().min(s2.samples.len());
    c
}

fn explore_pair(cfg: &ExplorationConfig, s1: &Shape, s2: &Shape, stage: &mut Stage) -> Result<MapTree> {
    stage.enter("explore");
    let cfg = clamp_exploration(cfg, s1, s2);
    let domains = PairDomains::new(&s1.basis, &s2.basis, &s1.samples, &s2.samples);
    let mut tree = init_tree(&s1.basis, &s2.basis, cfg)?;
    tree.shape_ids = (s1.id.clone(), s2.id.clone());
    explore(tree, &domains)
}

fn file_name(i: usize, total: usize, ext: &str) -> String {
    let width = total.saturating_sub(1).to_string().len().max(2);
    format!("{i:0width$}.{ext}")
}

/// Report for a dense map; accuracy is measured over the FPS samples of `s1`.
fn report(
    pmap: &PointwiseMap,
    s1: &Shape,
    s2: &Shape,
    k: usize,
    gt: Option<&PointwiseMap>,
    stage: &mut Stage,
) -> Result<QualityReport> {
    stage.enter("metrics");
    let geo1 = geodesic_distances(&s1.mesh, &s1.samples)?;
    let mut sources: Vec<usize> = s1.samples.iter().map(|&v| pmap.get(v)).collect();
    if let Some(g) = gt {
        sources.extend(s1.samples.iter().map(|&v| g.get(v)));
    }
    sources.sort_unstable();
    sources.dedup();
    let geo2 = geodesic_distances(&s2.mesh, &sources)?;
    let ctx = PairContext {
        mesh1: &s1.mesh,
        mesh2: &s2.mesh,
        laplacian1: &s1.laplacian,
        basis1: &s1.basis,
        basis2: &s2.basis,
        geo1: &geo1,
        geo2: &geo2,
        samples: &s1.samples,
        k,
    };
    let mut r = quality_report(pmap, &ctx, None)?;
    if let Some(g) = gt {
        let restrict = |m: &PointwiseMap| {
            PointwiseMap::new(s1.samples.iter().map(|&v| m.get(v)).collect(), m.codomain_size())
        };
        r.accuracy = Some(accuracy(&restrict(pmap)?, &restrict(g)?, &geo2)?);
    }
    Ok(r)
}

fn read_map(path: &Path, s1: &Shape, s2: &Shape) -> Result<PointwiseMap> {
    let m = read_pointwise_text(path)?;
    if m.domain_size() != s1.mesh.num_vertices() || m.codomain_size() != s2.mesh.num_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "{} maps {}->{}, meshes have {} and {} vertices",
            path.display(),
            m.domain_size(),
            m.codomain_size(),
            s1.mesh.num_vertices(),
            s2.mesh.num_vertices()
        )));
    }
    Ok(m)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes maps, reports, optional PLYs and the tree of one exploration under
/// `dir/prefix`, returning manifest entries with paths relative to the run root.
#[allow(clippy::too_many_arguments)]
fn write_tree_outputs(
    cfg: &RunConfig,
    dir: &Path,
    prefix: &str,
    tree: &MapTree,
    s1: &Shape,
    s2: &Shape,
    gt: Option<&PointwiseMap>,
    stage: &mut Stage,
) -> Result<(Vec<ManifestMap>, String)> {
    let leaves = tree.surviving_leaves();
    let base = dir.join(prefix);
    create_dir(&base.join("maps"))?;
    create_dir(&base.join("reports"))?;
    if cfg.export_ply {
        create_dir(&base.join("colors"))?;
    }
    let mut entries = Vec::new();
    let mut map_files = Vec::new();
    for (i, &id) in leaves.iter().enumerate() {
        let dense = tree.nodes[id].dense.as_ref().expect("finalized leaves carry dense maps");
        let pmap = &dense.pi_12;
        let map_file = format!("{prefix}maps/{}", file_name(i, leaves.len(), "map"));
        let report_file = format!("{prefix}reports/{}", file_name(i, leaves.len(), "json"));
        let r = report(pmap, s1, s2, tree.config.k_final, gt, stage)?;
        stage.enter("output");
        write_pointwise_text(dir.join(&map_file), pmap)?;
        write_json(&dir.join(&report_file), &r)?;
        if cfg.export_ply {
            let colors = transfer_colors(&coordinate_colors(&s2.mesh), pmap.targets());
            write_ply(dir.join(format!("{prefix}colors/{}", file_name(i, leaves.len(), "ply"))), &s1.mesh, Some(&colors))?;
        }
        map_files.push((id, map_file.clone()));
        entries.push(ManifestMap { leaf: Some(id), map_file, report_file, report: r });
    }
    stage.enter("output");
    let tree_file = format!("{prefix}tree.json");
    write_json(&dir.join(&tree_file), &tree.to_json(&map_files))?;
    Ok((entries, tree_file))
}

fn input_str(cfg: &RunConfig, i: usize) -> String {
    cfg.inputs[i].display().to_string()
}

fn run_pair(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m1 = load(&cfg.inputs[0], stage)?;
    let m2 = load(&cfg.inputs[1], stage)?;
    let k = cfg.exploration.basis_size();
    let s1 = prepare(m1, k, cfg.exploration.sample_count, stage)?;
    let s2 = prepare(m2, k, cfg.exploration.sample_count, stage)?;
    let gt = match &cfg.ground_truth {
        Some(p) => Some(read_map(p, &s1, &s2)?),
        None => None,
    };
    let tree = explore_pair(&cfg.exploration, &s1, &s2, stage)?;
    manifest.shapes = vec![s1.describe(&input_str(cfg, 0)), s2.describe(&input_str(cfg, 1))];
    let (maps, tree_file) = write_tree_outputs(cfg, dir, "", &tree, &s1, &s2, gt.as_ref(), stage)?;
    manifest.maps = maps;
    manifest.tree_file = Some(tree_file);
    manifest.warnings = tree.warnings.clone();
    Ok(())
}

fn run_selfsym(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m = load(&cfg.inputs[0], stage)?;
    let s = prepare(m, cfg.exploration.basis_size(), cfg.exploration.sample_count, stage)?;
    let tree = explore_pair(&cfg.exploration, &s, &s, stage)?;
    manifest.shapes = vec![s.describe(&input_str(cfg, 0))];
    let (maps, tree_file) = write_tree_outputs(cfg, dir, "", &tree, &s, &s, None, stage)?;
    manifest.tree_file = Some(tree_file);
    manifest.warnings = tree.warnings.clone();

    stage.enter("select");
    let leaves = tree.surviving_leaves();
    if leaves.is_empty() {
        manifest.warnings.push("no surviving self-maps".into());
        manifest.maps = maps;
        return Ok(());
    }
    let candidates: Vec<_> = leaves
        .iter()
        .map(|&id| {
            let node = &tree.nodes[id];
            (node.fmap.clone(), node.dense.as_ref().expect("dense map").pi_12.clone())
        })
        .collect();
    let geo = geodesic_distances(&s.mesh, &s.samples)?;
    let choice = select_self_symmetry(&candidates, &s.basis.eigenvalues, &geo, &s.samples, DEFAULT_SYMMETRY_THRESHOLD)?;
    let mut extra = json!({
        "symmetry": {
            "map_index": choice.index,
            "map_file": maps[choice.index].map_file,
            "mean_displacement": choice.displacement,
            "no_symmetry_found": choice.no_symmetry_found,
            "displacement_threshold": DEFAULT_SYMMETRY_THRESHOLD,
        }
    });
    let n = s.mesh.num_vertices();
    if n <= REGION_VERTEX_LIMIT {
        let all: Vec<usize> = (0..n).collect();
        let geo_all = geodesic_distances(&s.mesh, &all)?;
        let mask = extract_symmetric_region(&candidates[choice.index].1, &s.mesh, &geo_all, DEFAULT_REGION_THRESHOLD)?;
        let text: String = mask.iter().map(|&b| if b { "1\n" } else { "0\n" }).collect();
        let path = dir.join("region.txt");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        extra["region"] = json!({
            "file": "region.txt",
            "threshold": DEFAULT_REGION_THRESHOLD,
            "marked_vertices": mask.iter().filter(|&&b| b).count(),
        });
    } else {
        manifest
            .warnings
            .push(format!("symmetric region skipped: {n} vertices exceeds {REGION_VERTEX_LIMIT}"));
    }
    manifest.maps = maps;
    manifest.extra = extra;
    Ok(())
}

fn run_components(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m = load(&cfg.inputs[0], stage)?;
    let split = connected_components(&m)?;
    let k = cfg.exploration.basis_size();
    let mut shapes = Vec::new();
    create_dir(&dir.join("components"))?;
    for (i, (mesh, verts)) in split.component_meshes.into_iter().zip(&split.vertex_maps).enumerate() {
        let s = prepare(mesh, k, cfg.exploration.sample_count, stage)?;
        stage.enter("output");
        let file = format!("components/{}", file_name(i, split.vertex_maps.len(), "txt"));
        let text: String = verts.iter().map(|v| format!("{v}\n")).collect();
        fs::write(dir.join(&file), text).map_err(|e| Error::io(dir.join(&file), e))?;
        let mut d = s.describe(&input_str(cfg, 0));
        d["component"] = json!(i);
        d["vertex_file"] = json!(file);
        manifest.shapes.push(d);
        shapes.push(s);
    }
    let mut pairs = Vec::new();
    for i in 0..shapes.len() {
        for j in i..shapes.len() {
            let tree = explore_pair(&cfg.exploration, &shapes[i], &shapes[j], stage)?;
            let prefix = format!("pairs/{i}_{j}/");
            let (maps, tree_file) = write_tree_outputs(cfg, dir, &prefix, &tree, &shapes[i], &shapes[j], None, stage)?;
            manifest.warnings.extend(tree.warnings.iter().map(|w| format!("pair {i}_{j}: {w}")));
            pairs.push(json!({
                "a": i,
                "b": j,
                "tree_file": tree_file,
                "maps": maps.iter().map(|m| m.map_file.clone()).collect::<Vec<_>>(),
            }));
            manifest.maps.extend(maps);
        }
    }
    manifest.extra = json!({ "components": shapes.len(), "pairs": pairs });
    Ok(())
}

fn run_refine(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m1 = load(&cfg.inputs[0], stage)?;
    let m2 = load(&cfg.inputs[1], stage)?;
    let k = cfg.refine.k_final;
    let s1 = prepare(m1, k, cfg.refine.sample_count, stage)?;
    let s2 = prepare(m2, k, cfg.refine.sample_count, stage)?;
    manifest.shapes = vec![s1.describe(&input_str(cfg, 0)), s2.describe(&input_str(cfg, 1))];
    let init = read_map(cfg.map.as_ref().expect("validated"), &s1, &s2)?;

    stage.enter("refine");
    let domains = PairDomains::new(&s1.basis, &s2.basis, &s1.samples, &s2.samples);
    let k_final = k.min(s1.basis.k()).min(s2.basis.k()).min(s1.samples.len()).min(s2.samples.len());
    let rc = RefineConfig {
        k_init: cfg.refine.k_init.min(k_final),
        k_final,
        sample_count: s1.samples.len().min(s2.samples.len()),
        ..cfg.refine
    };
    let c21 = domains.full1.pull_back(&init, &domains.full2, rc.k_init, rc.k_init)?;
    let pair = pair_from_fmap(&c21, &domains.sampled1, &domains.sampled2)?;
    let (pair, log) = bijective_zoomout_logged(&pair, &domains.sampled1, &domains.sampled2, &rc)?;
    let dense = densify(&pair, k_final, k_final, &domains)?;
    let r = report(&dense.pi_12, &s1, &s2, k_final, None, stage)?;

    stage.enter("output");
    create_dir(&dir.join("maps"))?;
    create_dir(&dir.join("reports"))?;
    write_pointwise_text(dir.join("maps/00.map"), &dense.pi_12)?;
    write_pointwise_text(dir.join("maps/00_reverse.map"), &dense.pi_21)?;
    write_json(&dir.join("reports/00.json"), &r)?;
    let log_path = dir.join("energy_log.csv");
    fs::write(&log_path, energy_log_csv(&log)).map_err(|e| Error::io(&log_path, e))?;
    manifest.maps.push(ManifestMap {
        leaf: None,
        map_file: "maps/00.map".into(),
        report_file: "reports/00.json".into(),
        report: r,
    });
    manifest.extra = json!({ "reverse_map_file": "maps/00_reverse.map", "energy_log": "energy_log.csv" });
    Ok(())
}

fn run_metrics(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m1 = load(&cfg.inputs[0], stage)?;
    let m2 = load(&cfg.inputs[1], stage)?;
    let k = cfg.exploration.k_final.min(DEFAULT_SELECTION_SIZE.max(cfg.exploration.kappa + 1));
    let s1 = prepare(m1, k, cfg.exploration.sample_count, stage)?;
    let s2 = prepare(m2, k, cfg.exploration.sample_count, stage)?;
    manifest.shapes = vec![s1.describe(&input_str(cfg, 0)), s2.describe(&input_str(cfg, 1))];
    let pmap = read_map(cfg.map.as_ref().expect("validated"), &s1, &s2)?;
    let gt = match &cfg.ground_truth {
        Some(p) => Some(read_map(p, &s1, &s2)?),
        None => None,
    };
    let kk = k.min(s1.basis.k()).min(s2.basis.k());
    let r = report(&pmap, &s1, &s2, kk, gt.as_ref(), stage)?;
    stage.enter("output");
    create_dir(&dir.join("reports"))?;
    write_json(&dir.join("reports/00.json"), &r)?;
    manifest.maps.push(ManifestMap {
        leaf: None,
        map_file: cfg.map.as_ref().expect("validated").display().to_string(),
        report_file: "reports/00.json".into(),
        report: r,
    });
    Ok(())
}

fn run_select(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    stage.enter("load");
    let path = &cfg.inputs[0];
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let size = match doc.get("size") {
        Some(v) => v.as_u64().ok_or_else(|| Error::TypeError {
            flag: "size".into(),
            message: "expected an integer".into(),
        })? as usize,
        None => DEFAULT_SELECTION_SIZE,
    };
    let entries = doc.get("pairs").and_then(Value::as_array).ok_or_else(|| Error::TypeError {
        flag: "pairs".into(),
        message: "expected an array of pair entries".into(),
    })?;
    let mut pairs = Vec::new();
    for e in entries {
        let field = |k: &str| {
            e.get(k).and_then(Value::as_u64).map(|v| v as usize).ok_or_else(|| Error::TypeError {
                flag: k.into(),
                message: "expected a shape index".into(),
            })
        };
        let files: Vec<PathBuf> = e
            .get("candidates")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_str).map(|s| resolve(&base, s)).collect())
            .unwrap_or_default();
        let flips: Vec<f64> = e
            .get("orientation_flip")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_default();
        let mut candidates = Vec::new();
        for (i, f) in files.iter().enumerate() {
            let fmap = read_fmap_json(f)?;
            if fmap.rows() < size || fmap.cols() < size {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, selection needs {size}x{size}",
                    f.display(),
                    fmap.rows(),
                    fmap.cols()
                )));
            }
            candidates.push(Candidate {
                fmap: fmap.matrix.view((0, 0), (size, size)).into_owned(),
                orientation_flip: flips.get(i).copied().unwrap_or(0.0),
            });
        }
        pairs.push(PairCandidates { a: field("a")?, b: field("b")?, candidates });
    }
    let triplets: Vec<[usize; 3]> = doc
        .get("triplets")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(|t| {
                    let v: Vec<usize> = t.as_array()?.iter().filter_map(Value::as_u64).map(|x| x as usize).collect();
                    <[usize; 3]>::try_from(v).ok()
                })
                .collect()
        })
        .unwrap_or_default();
    stage.enter("select");
    let set = CandidateSet::new(pairs)?;
    let result = select_by_cycles(&set, &triplets, DEFAULT_MAX_SWEEPS)?;
    stage.enter("output");
    write_json(&dir.join("selection.json"), &result)?;
    manifest.extra = json!({ "selection_file": "selection.json", "size": size, "result": result });
    Ok(())
}

fn resolve(base: &Path, s: &str) -> PathBuf {
    let p = PathBuf::from(s);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn run_landscape(cfg: &RunConfig, dir: &Path, stage: &mut Stage, manifest: &mut RunManifest) -> Result<()> {
    let m = load(&cfg.inputs[0], stage)?;
    let s = prepare(m, cfg.refine.k_final, cfg.refine.sample_count, stage)?;
    manifest.shapes = vec![s.describe(&input_str(cfg, 0))];
    let l = &cfg.landscape;

    stage.enter("refine");
    let domain = SpectralDomain::sampled(&s.basis, &s.samples);
    let m_samples = s.samples.len();
    let k_final = cfg.refine.k_final.min(domain.kmax()).min(m_samples);
    let rc = RefineConfig { k_init: cfg.refine.k_init.min(k_final), k_final, sample_count: m_samples, ..cfg.refine };
    let seeds = random_maps(m_samples, m_samples, l.count, l.seed)?;
    let refined: Vec<PointwiseMap> = seeds
        .maps
        .iter()
        .map(|p| zoomout(p, &domain, &domain, &rc))
        .collect::<Result<_>>()?;
    let (ensemble, dense) = landscape_maps(&refined, &s.samples, s.mesh.num_vertices())?;

    stage.enter("landscape");
    let geo = geodesic_distances(&s.mesh, &s.samples)?;
    let (mean, _max) = distance_matrices(&ensemble, &geo)?;
    let mut land = mds_embed(&mean)?;
    let clusters = l.clusters.min(ensemble.len());
    let ids = kmeans(&land.coordinates, clusters, l.seed)?;
    let sil = silhouette(&mean, &ids)?;
    land.cluster_ids = Some(ids);
    let distortion: Vec<f64> = dense
        .iter()
        .map(|p| crate::metrics::geodesic_distortion(p, &geo, &geo, &s.samples))
        .collect::<Result<_>>()?;
    stage.enter("output");
    write_landscape_csv(dir.join("landscape.csv"), &land, Some(&distortion))?;
    manifest.extra = json!({
        "landscape_file": "landscape.csv",
        "maps": ensemble.len(),
        "stress": land.stress,
        "silhouette": sil,
        "distance": "mean normalized geodesic",
    });
    Ok(())
}

/// Sample-indexed self-maps as maps over sample rows into vertex ids, plus dense
/// vertex maps (identity off the samples) for distortion measurements.
fn landscape_maps(
    maps: &[PointwiseMap],
    samples: &[usize],
    n: usize,
) -> Result<(crate::analysis::MapEnsemble, Vec<PointwiseMap>)> {
    let mut rows = Vec::with_capacity(maps.len());
    let mut dense = Vec::with_capacity(maps.len());
    for m in maps {
        let targets: Vec<usize> = m.targets().iter().map(|&t| samples[t]).collect();
        let mut full: Vec<usize> = (0..n).collect();
        for (&v, &t) in samples.iter().zip(&targets) {
            full[v] = t;
        }
        rows.push(PointwiseMap::new(targets, n)?);
        dense.push(PointwiseMap::new(full, n)?);
    }
    Ok((crate::analysis::MapEnsemble::new(rows)?, dense))
}
