//! Command-line surface: configuration parsing and run orchestration.

mod run;

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::maptree::ExplorationConfig;
use crate::refine::RefineConfig;

pub use run::{run, write_failure_manifest, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pair,
    SelfSym,
    Components,
    Refine,
    Metrics,
    Select,
    Landscape,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pair => "pair",
            Mode::SelfSym => "selfsym",
            Mode::Components => "components",
            Mode::Refine => "refine",
            Mode::Metrics => "metrics",
            Mode::Select => "select",
            Mode::Landscape => "landscape",
        }
    }

    fn input_count(self) -> usize {
        match self {
            Mode::Pair | Mode::Refine | Mode::Metrics => 2,
            Mode::SelfSym | Mode::Components | Mode::Select | Mode::Landscape => 1,
        }
    }
}

/// Settings for the `landscape` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeConfig {
    pub count: usize,
    pub clusters: usize,
    pub seed: u64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig { count: 1000, clusters: 2, seed: 0 }
    }
}

/// Everything a run needs, after merging defaults, the JSON config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub exploration: ExplorationConfig,
    pub refine: RefineConfig,
    pub landscape: LandscapeConfig,
    /// Initial map for `refine`, map under test for `metrics`.
    pub map: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub export_ply: bool,
    pub threads: Option<usize>,
    pub verbosity: u8,
}

impl RunConfig {
    /// Config with defaults for the given mode and paths.
    pub fn new(mode: Mode, inputs: Vec<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            mode,
            inputs,
            out: out.into(),
            exploration: ExplorationConfig::default(),
            refine: RefineConfig::default(),
            landscape: LandscapeConfig::default(),
            map: None,
            ground_truth: None,
            export_ply: false,
            threads: None,
            verbosity: 0,
        }
    }

    /// JSON snapshot of the tunable settings and inputs (the output directory is left
    /// out so that runs into different directories produce the same manifest).
    pub fn snapshot(&self) -> Value {
        let e = &self.exploration;
        let r = &self.refine;
        let l = &self.landscape;
        json!({
            "mode": self.mode.as_str(),
            "inputs": self.inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "map": self.map.as_ref().map(|p| p.display().to_string()),
            "ground_truth": self.ground_truth.as_ref().map(|p| p.display().to_string()),
            "epsilon_group": e.epsilon_group,
            "epsilon_ortho": e.epsilon_ortho,
            "epsilon_lapcomm": e.epsilon_lapcomm,
            "kappa": e.kappa,
            "max_group_size": e.max_group_size,
            "dedup_agreement": e.dedup_agreement,
            "refine_budget": e.refine_budget,
            "samples": e.sample_count,
            "k_final": e.k_final,
            "max_leaves": e.max_leaves,
            "k_init": r.k_init,
            "k_step": r.k_step,
            "count": l.count,
            "clusters": l.clusters,
            "seed": l.seed,
            "export_ply": self.export_ply,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "maptree", version, about = "Multi-solution shape correspondence by map tree exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explore maps between two meshes.
    Explore(CommonArgs),
    /// Explore the self-maps of one mesh and pick its symmetry.
    Selfsym(CommonArgs),
    /// Split a mesh into components and explore every pair and every component.
    Components(CommonArgs),
    /// Refine an initial pointwise map with Bijective ZoomOut.
    Refine(CommonArgs),
    /// Score a pointwise map.
    Metrics(CommonArgs),
    /// Cycle-consistency selection over a candidate manifest.
    Select(CommonArgs),
    /// Random-map landscape of one mesh.
    Landscape(CommonArgs),
}

impl Command {
    fn split(self) -> (Mode, CommonArgs) {
        match self {
            Command::Explore(a) => (Mode::Pair, a),
            Command::Selfsym(a) => (Mode::SelfSym, a),
            Command::Components(a) => (Mode::Components, a),
            Command::Refine(a) => (Mode::Refine, a),
            Command::Metrics(a) => (Mode::Metrics, a),
            Command::Select(a) => (Mode::Select, a),
            Command::Landscape(a) => (Mode::Landscape, a),
        }
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input meshes (or the candidate manifest for `select`).
    inputs: Vec<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon_group: Option<f64>,
    #[arg(long)]
    epsilon_ortho: Option<f64>,
    #[arg(long)]
    epsilon_lapcomm: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    max_group_size: Option<usize>,
    #[arg(long = "dedup")]
    dedup_agreement: Option<f64>,
    #[arg(long)]
    refine_budget: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    k_init: Option<usize>,
    #[arg(long)]
    k_step: Option<usize>,
    #[arg(long)]
    k_final: Option<usize>,
    #[arg(long)]
    max_leaves: Option<usize>,
    /// Pointwise map file (initial map for `refine`, map under test for `metrics`).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Ground-truth pointwise map, used for accuracy.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write color-transfer PLY files.
    #[arg(long)]
    export_ply: bool,
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// Turns a clap failure into the library's error, keeping `--help`/`--version` as
/// printable clap errors for the caller.
fn convert_clap(e: clap::Error) -> std::result::Result<Error, clap::Error> {
    let context = |kind| {
        e.get(kind)
            .map(|v| v.to_string())
            .unwrap_or_default()
    };
    use clap::error::ContextKind;
    match e.kind() {
        ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => {
            Ok(Error::UnknownFlag(context(ContextKind::InvalidArg)))
        }
        ErrorKind::ValueValidation | ErrorKind::InvalidValue => Ok(Error::TypeError {
            flag: context(ContextKind::InvalidArg),
            message: context(ContextKind::InvalidValue),
        }),
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            Err(e)
        }
        _ => Ok(Error::TypeError { flag: "arguments".into(), message: e.to_string() }),
    }
}

/// Parses `argv` (including the program name). Help and version requests come back
/// as `Err(Err(clap_error))` so the caller can print them.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, std::result::Result<Error, clap::Error>>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(convert_clap)?;
    let (mode, args) = cli.command.split();
    build_config(mode, args).map_err(Ok)
}

/// Parses `argv` into a [`RunConfig`]: flags override config-file values, which
/// override defaults.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    parse_args(argv).map_err(|e| match e {
        Ok(e) => e,
        Err(clap) => Error::UnknownFlag(clap.kind().to_string()),
    })
}

fn build_config(mode: Mode, a: CommonArgs) -> Result<RunConfig> {
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut cfg = RunConfig::new(mode, a.inputs.clone(), out);
    if let Some(path) = &a.config {
        apply_file(&mut cfg, path)?;
    }
    let e = &mut cfg.exploration;
    set(&mut e.epsilon_group, a.epsilon_group);
    set(&mut e.epsilon_ortho, a.epsilon_ortho);
    set(&mut e.epsilon_lapcomm, a.epsilon_lapcomm);
    set(&mut e.kappa, a.kappa);
    set(&mut e.max_group_size, a.max_group_size);
    set(&mut e.dedup_agreement, a.dedup_agreement);
    set(&mut e.refine_budget, a.refine_budget);
    set(&mut e.sample_count, a.samples);
    set(&mut e.k_final, a.k_final);
    set(&mut e.max_leaves, a.max_leaves);
    set(&mut cfg.refine.k_init, a.k_init);
    set(&mut cfg.refine.k_step, a.k_step);
    set(&mut cfg.landscape.count, a.count);
    set(&mut cfg.landscape.clusters, a.clusters);
    set(&mut cfg.landscape.seed, a.seed);
    if a.map.is_some() {
        cfg.map = a.map;
    }
    if a.gt.is_some() {
        cfg.ground_truth = a.gt;
    }
    cfg.export_ply |= a.export_ply;
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    cfg.verbosity = a.verbose;
    cfg.refine.sample_count = cfg.exploration.sample_count;
    cfg.refine.k_final = cfg.exploration.k_final;
    validate(&cfg)?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let want = cfg.mode.input_count();
    if cfg.inputs.len() != want {
        return Err(Error::TypeError {
            flag: "inputs".into(),
            message: format!("{} expects {want} input path(s), got {}", cfg.mode.as_str(), cfg.inputs.len()),
        });
    }
    if matches!(cfg.mode, Mode::Refine | Mode::Metrics) && cfg.map.is_none() {
        return Err(Error::TypeError {
            flag: "--map".into(),
            message: format!("{} needs a pointwise map file", cfg.mode.as_str()),
        });
    }
    cfg.exploration.validate()?;
    cfg.refine.validate()?;
    if cfg.landscape.count == 0 {
        return Err(Error::TypeError { flag: "--count".into(), message: "must be at least 1".into() });
    }
    Ok(())
}

fn type_error(key: &str, expected: &str) -> Error {
    Error::TypeError { flag: key.to_string(), message: format!("expected {expected}") }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| type_error(key, "a number"))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| type_error(key, "a non-negative integer"))
}

fn as_path(key: &str, v: &Value) -> Result<PathBuf> {
    v.as_str().map(PathBuf::from).ok_or_else(|| type_error(key, "a path string"))
}

/// Applies a JSON object of settings. Keys use the flag names with underscores.
fn apply_file(cfg: &mut RunConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(type_error("config", "a JSON object"));
    };
    apply_map(cfg, &map)
}

fn apply_map(cfg: &mut RunConfig, map: &Map<String, Value>) -> Result<()> {
    for (key, v) in map {
        let k = key.as_str();
        let e = &mut cfg.exploration;
        match k {
            "epsilon_group" => e.epsilon_group = as_f64(k, v)?,
            "epsilon_ortho" => e.epsilon_ortho = as_f64(k, v)?,
            "epsilon_lapcomm" => e.epsilon_lapcomm = as_f64(k, v)?,
            "kappa" => e.kappa = as_usize(k, v)?,
            "max_group_size" => e.max_group_size = as_usize(k, v)?,
            "dedup" | "dedup_agreement" => e.dedup_agreement = as_f64(k, v)?,
            "refine_budget" => e.refine_budget = as_usize(k, v)?,
            "samples" => e.sample_count = as_usize(k, v)?,
            "k_final" => e.k_final = as_usize(k, v)?,
            "max_leaves" => e.max_leaves = as_usize(k, v)?,
            "k_init" => cfg.refine.k_init = as_usize(k, v)?,
            "k_step" => cfg.refine.k_step = as_usize(k, v)?,
            "count" => cfg.landscape.count = as_usize(k, v)?,
            "clusters" => cfg.landscape.clusters = as_usize(k, v)?,
            "seed" => cfg.landscape.seed = as_usize(k, v)? as u64,
            "map" => cfg.map = Some(as_path(k, v)?),
            "gt" => cfg.ground_truth = Some(as_path(k, v)?),
            "out" => cfg.out = as_path(k, v)?,
            "export_ply" => cfg.export_ply = v.as_bool().ok_or_else(|| type_error(k, "a boolean"))?,
            "threads" => cfg.threads = Some(as_usize(k, v)?),
            _ => return Err(Error::UnknownFlag(key.clone())),
        }
    }
    Ok(())
}
