//! Subcommands of the `conflict` binary, kept in a library so tests can
//! drive them without spawning processes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use conflict_core::aoc::{self, write_curve_csv, write_regions_csv};
use conflict_core::sim::{self, count_conflicts, run_experiment_logged, write_episode_csv};
use conflict_core::{
    aoc_curve, aoc_monte_carlo, conflict_region_bounds, gaps, DecisionOutcome, Error, ModelKind, PlannerConfig,
    RewardMatrix, ScenarioConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::SingularSystem(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "conflict",
    version,
    about = "Area of Conflict tables, curves, grids and lane-change simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical AoC of every model kind for one matrix.
    AocTable(TableArgs),
    /// Monte Carlo AoC estimate.
    AocMc(McArgs),
    /// AoC as a function of the gap A for fixed B.
    Curve(CurveArgs),
    /// Conflict interval of the second coefficient for sampled first coefficients.
    Regions(RegionArgs),
    /// Decision outcome for every pair of coefficients.
    ConflictGrid(GridArgs),
    /// One lane-change episode.
    Simulate(SimulateArgs),
    /// Seeded episodes over a coefficient grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config (or a manifest JSON from an earlier run). Flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: Common,
    /// Reward matrix JSON; the lane-change matrix when omitted.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Number of samples.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value_t = 0.1)]
    pub a_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub a_max: f64,
    /// Number of evenly spaced A values, endpoints included.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Comma-separated kinds; all kinds when omitted.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Number of evenly spaced first-agent coefficients.
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    /// Row and column coefficients.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-step state log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; every episode seed is derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Everything a run depends on. This is both the config file layout and
/// the `config` section of a manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Inline matrix; `--matrix` replaces it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<RewardMatrix>,
    pub planner: PlannerConfig,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    /// Command-specific flags that are not part of [`RunConfig`].
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn path_for(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Short human-readable line for the terminal.
    pub summary: String,
    /// Output body; already written when `out` was given.
    pub body: String,
    pub manifest: Option<PathBuf>,
    /// Set when some work failed but partial output was still written.
    pub partial: Option<String>,
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(c) if value.get("command").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| input(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
    }
}

pub fn load_matrix(path: &Path) -> CliResult<RewardMatrix> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    RewardMatrix::from_json_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn parse_kind(s: &str) -> CliResult<ModelKind> {
    s.trim().parse::<ModelKind>().map_err(CliError::from)
}

fn parse_kinds(s: &str) -> CliResult<Vec<ModelKind>> {
    s.split(',').map(parse_kind).collect()
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| input(format!("missing required --{flag}")))
}

/// Default grid of the experiments: plain fractions, or angles for SVO.
pub fn default_coeffs(kind: ModelKind) -> Vec<f64> {
    use std::f64::consts::PI;
    match kind {
        ModelKind::Svo => vec![0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, 1.0],
        _ => vec![0.0, 0.25, 0.51, 0.75, 0.99],
    }
}

struct Resolved {
    cfg: RunConfig,
}

impl Resolved {
    fn new(common: &Common, matrix: Option<&Path>) -> CliResult<Self> {
        let mut cfg = load_config(common.config.as_deref())?;
        if let Some(path) = matrix {
            cfg.matrix = Some(load_matrix(path)?);
        }
        if common.jobs.is_some() {
            cfg.jobs = common.jobs;
        }
        Ok(Resolved { cfg })
    }

    fn matrix(&self) -> RewardMatrix {
        self.cfg.matrix.unwrap_or_else(RewardMatrix::lane_change)
    }

    fn kind(&mut self, flag: &Option<String>) -> CliResult<ModelKind> {
        if flag.is_some() {
            self.cfg.model = flag.clone();
        }
        let name = require(self.cfg.model.clone(), "model")?;
        let kind = parse_kind(&name)?;
        self.cfg.model = Some(kind.name().to_string());
        Ok(kind)
    }

    fn seed(&mut self, flag: Option<u64>) -> CliResult<u64> {
        if flag.is_some() {
            self.cfg.seed = flag;
        }
        require(self.cfg.seed, "seed")
    }

    fn coeffs(&mut self, flag: &Option<Vec<f64>>) -> Option<Vec<f64>> {
        if flag.is_some() {
            self.cfg.coeffs = flag.clone();
        }
        self.cfg.coeffs.clone()
    }

    fn scenario(&mut self) -> CliResult<ScenarioConfig> {
        if let Some(m) = self.cfg.matrix {
            self.cfg.scenario.matrix = m;
        }
        self.cfg.scenario.validate()?;
        self.cfg.planner.validate()?;
        Ok(self.cfg.scenario.clone())
    }

    /// Runs `f` on a pool of the configured size.
    fn pooled<T: Send>(&self, f: impl FnOnce() -> T + Send) -> CliResult<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok(pool.install(f))
    }
}

/// Body and bookkeeping of one command run.
struct Output {
    body: String,
    summary: String,
    seeds: Vec<u64>,
    /// Files written besides the main output.
    extra: Vec<PathBuf>,
    params: serde_json::Value,
}

impl Output {
    fn new(body: String, summary: String) -> Self {
        Output {
            body,
            summary,
            seeds: vec![],
            extra: vec![],
            params: serde_json::Value::Null,
        }
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }
}

/// Writes the body to `--out` (if any) together with its manifest.
fn emit(command: &str, common: &Common, cfg: RunConfig, o: Output) -> CliResult<Report> {
    let Some(out) = &common.out else {
        return Ok(Report {
            summary: o.summary,
            body: o.body,
            manifest: None,
            partial: None,
        });
    };
    write_file(out, o.body.as_bytes())?;
    let manifest_path = RunManifest::path_for(out);
    let mut outputs = vec![out.clone()];
    outputs.extend(o.extra);
    let manifest = RunManifest {
        command: command.to_string(),
        version: VERSION.to_string(),
        config: cfg,
        params: match o.params {
            serde_json::Value::Object(m) => m,
            _ => serde_json::Map::new(),
        },
        seeds: o.seeds,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&manifest_path, format!("{text}\n").as_bytes())?;
    Ok(Report {
        summary: o.summary,
        body: o.body,
        manifest: Some(manifest_path),
        partial: None,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn manifest_name(common: &Common) -> Option<String> {
    common.out.as_ref().map(|o| {
        RunManifest::path_for(o)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn csv<F>(f: F) -> CliResult<String>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_aoc_table(args: &TableArgs) -> CliResult<Report> {
    let r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let m = r.matrix().validate()?;
    let g = gaps(&m)?;
    let rows = aoc_curve(&ModelKind::ALL, &[g.a], g.b)?;
    let body = csv(|w| write_curve_csv(&rows, w))?;
    let summary = rows
        .iter()
        .map(|r| format!("{} {}", r.kind, conflict_core::format::sig(r.aoc, 6)))
        .collect::<Vec<_>>()
        .join(", ");
    emit("aoc-table", &args.common, r.cfg, Output::new(body, summary))
}

#[derive(Serialize)]
struct McOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    kind: ModelKind,
    estimate: f64,
    standard_error: f64,
    n: u64,
    seed: u64,
    conflicts: u64,
    analytical: f64,
    matrix: &'a RewardMatrix,
}

pub fn cmd_aoc_mc(args: &McArgs) -> CliResult<Report> {
    let mut r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let kind = r.kind(&args.model)?;
    let seed = r.seed(args.seed)?;
    if args.n.is_some() {
        r.cfg.n = args.n;
    }
    let n = r.cfg.n.unwrap_or(1_000_000);
    r.cfg.n = Some(n);
    let matrix = r.matrix();
    let m = matrix.validate()?;
    let analytical = aoc::aoc_analytical(kind, gaps(&m)?)?.value;
    let est = r.pooled(|| aoc_monte_carlo(kind, &m, n, seed))??;
    let out = McOutput {
        manifest: manifest_name(&args.common),
        kind,
        estimate: est.estimate,
        standard_error: est.standard_error,
        n,
        seed,
        conflicts: est.conflicts,
        analytical,
        matrix: &matrix,
    };
    let body = to_json(&out)?;
    let summary = format!(
        "{kind}: {} +/- {} (analytical {})",
        conflict_core::format::sig(est.estimate, 6),
        conflict_core::format::sig(est.standard_error, 3),
        conflict_core::format::sig(analytical, 6)
    );
    emit("aoc-mc", &args.common, r.cfg, Output::new(body, summary).seed(seed))
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| {
                if k == steps - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn cmd_curve(args: &CurveArgs) -> CliResult<Report> {
    let r = Resolved::new(&args.common, None)?;
    if args.steps == 0 || args.a_min.is_nan() || args.a_max.is_nan() || args.a_min > args.a_max {
        return Err(input("curve needs steps >= 1 and a-min <= a-max"));
    }
    let kinds = match &args.model {
        Some(s) => parse_kinds(s)?,
        None => ModelKind::ALL.to_vec(),
    };
    let rows = aoc_curve(&kinds, &linspace(args.a_min, args.a_max, args.steps), args.b)?;
    let body = csv(|w| write_curve_csv(&rows, w))?;
    let summary = format!("{} rows", rows.len());
    let params = serde_json::json!({
        "b": args.b, "a_min": args.a_min, "a_max": args.a_max, "steps": args.steps, "kinds": kinds,
    });
    emit(
        "curve",
        &args.common,
        r.cfg,
        Output {
            params,
            ..Output::new(body, summary)
        },
    )
}

pub fn cmd_regions(args: &RegionArgs) -> CliResult<Report> {
    let mut r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let kind = r.kind(&args.model)?;
    let m = r.matrix().validate()?;
    let g = gaps(&m)?;
    let samples = linspace(0.0, kind.coefficient_span(), args.samples);
    let bounds = conflict_region_bounds(kind, g, &samples)?;
    let body = csv(|w| write_regions_csv(&bounds, w))?;
    let summary = format!("{kind}: {} samples", bounds.rows.len());
    let params = serde_json::json!({ "samples": args.samples });
    emit(
        "regions",
        &args.common,
        r.cfg,
        Output {
            params,
            ..Output::new(body, summary)
        },
    )
}

#[derive(Serialize)]
struct GridOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    model: ModelKind,
    coeffs: &'a [f64],
    conflicts: usize,
    non_conflicts: usize,
    cells: &'a [Vec<DecisionOutcome>],
}

pub fn cmd_conflict_grid(args: &GridArgs) -> CliResult<Report> {
    let mut r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let kind = r.kind(&args.model)?;
    let coeffs = r.coeffs(&args.coeffs).unwrap_or_else(|| default_coeffs(kind));
    r.cfg.coeffs = Some(coeffs.clone());
    let m = r.matrix().validate()?;
    let cells = sim::conflict_grid(kind, &coeffs, &m)?;
    let (conflicts, non_conflicts) = count_conflicts(&cells);
    let body = to_json(&GridOutput {
        manifest: manifest_name(&args.common),
        model: kind,
        coeffs: &coeffs,
        conflicts,
        non_conflicts,
        cells: &cells,
    })?;
    let summary = format!("{kind}: {conflicts}/{non_conflicts} conflict/non-conflict cells");
    emit("conflict-grid", &args.common, r.cfg, Output::new(body, summary))
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    model: conflict_core::SocialModel,
    record: &'a conflict_core::ExperimentRecord,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Report> {
    let mut r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let kind = r.kind(&args.model)?;
    let seed = r.seed(args.seed)?;
    let coeffs = match kind {
        ModelKind::Baseline => r.coeffs(&args.coeffs).unwrap_or_default(),
        _ => require(r.coeffs(&args.coeffs), "coeffs")?,
    };
    let (c1, c2) = match coeffs[..] {
        [] if kind == ModelKind::Baseline => (0.0, 0.0),
        [c1, c2] => (c1, c2),
        _ => return Err(input("--coeffs needs exactly two values for simulate")),
    };
    let model = kind.with_coeffs(c1, c2);
    let scenario = r.scenario()?;
    let (record, log) = run_experiment_logged(&model, &scenario, &r.cfg.planner, seed)?;
    let mut extra = vec![];
    if let Some(path) = &args.log {
        let text = csv(|w| write_episode_csv(&log, w))?;
        write_file(path, text.as_bytes())?;
        extra.push(path.clone());
    }
    let body = to_json(&SimulateOutput {
        manifest: manifest_name(&args.common),
        model,
        record: &record,
    })?;
    let summary = format!(
        "{kind} ({c1}, {c2}) seed {seed}: {:?} R = {}{}",
        record.category,
        conflict_core::format::sig(record.signed_time, 6),
        if record.timeout { " (timeout)" } else { "" }
    );
    emit(
        "simulate",
        &args.common,
        r.cfg,
        Output {
            extra,
            ..Output::new(body, summary).seed(seed)
        },
    )
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    partial: bool,
    #[serde(flatten)]
    grid: &'a conflict_core::SweepGrid,
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<Report> {
    let mut r = Resolved::new(&args.common, args.matrix.as_deref())?;
    let kind = r.kind(&args.model)?;
    let seed = r.seed(args.seed)?;
    let coeffs = r.coeffs(&args.coeffs).unwrap_or_else(|| default_coeffs(kind));
    r.cfg.coeffs = Some(coeffs.clone());
    if args.reps.is_some() {
        r.cfg.reps = args.reps;
    }
    let reps = r.cfg.reps.unwrap_or(5);
    r.cfg.reps = Some(reps);
    let scenario = r.scenario()?;
    let planner = r.cfg.planner.clone();
    let grid = r.pooled(|| sim::run_sweep(kind, &coeffs, reps, &scenario, &planner, seed))??;
    let partial = grid.any_failed();
    let body = to_json(&SweepOutput {
        manifest: manifest_name(&args.common),
        partial,
        grid: &grid,
    })?;
    let episodes = grid.records.iter().flatten().flatten().count();
    let done: usize = grid.completed.iter().flatten().sum();
    let summary = format!("{kind}: {episodes} episodes, {done} completed");
    let mut report = emit("sweep", &args.common, r.cfg, Output::new(body, summary).seed(seed))?;
    if partial {
        let failed = grid.failed.iter().flatten().filter(|f| **f).count();
        report.partial = Some(format!("{failed} cells had aborted episodes"));
    }
    Ok(report)
}

pub fn run(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::AocTable(a) => cmd_aoc_table(a),
        Command::AocMc(a) => cmd_aoc_mc(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Regions(a) => cmd_regions(a),
        Command::ConflictGrid(a) => cmd_conflict_grid(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if report.manifest.is_none() {
                let _ = lock.write_all(report.body.as_bytes());
            }
            eprintln!("{}", report.summary);
            if let Some(p) = &report.manifest {
                eprintln!("manifest: {}", p.display());
            }
            match report.partial {
                Some(msg) => {
                    eprintln!("error: partial output: {msg}");
                    3
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("conflict").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn linspace_hits_both_ends() {
        let v = linspace(0.4, 2.9, 26);
        assert_eq!(v.len(), 26);
        assert_eq!(v[0], 0.4);
        assert_eq!(v[25], 2.9);
        assert!((v[1] - 0.5).abs() < 1e-12);
        assert_eq!(linspace(1.0, 1.0, 1), vec![1.0]);
    }

    #[test]
    fn table_on_default_matrix() {
        let report = run(&parse(&["aoc-table"])).unwrap();
        let lines: Vec<&str> = report.body.lines().collect();
        assert_eq!(lines[0], "kind,A,B,aoc");
        assert!(lines.contains(&"altruism,1,1,0.5"));
        assert!(lines.contains(&"augmented-altruism,1,1,0.386294361"));
    }

    #[test]
    fn mc_requires_seed() {
        let err = run(&parse(&["aoc-mc", "--model", "altruism", "--n", "2000"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--seed"));
    }

    #[test]
    fn unknown_model_is_input_error() {
        let err = run(&parse(&["conflict-grid", "--model", "selfish"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_summary_line() {
        let report = run(&parse(&["conflict-grid", "--model", "aug"])).unwrap();
        assert_eq!(report.summary, "augmented-altruism: 9/16 conflict/non-conflict cells");
    }

    #[test]
    fn coefficient_list_parses() {
        let cli = parse(&["conflict-grid", "--model", "altruism", "--coeffs", "0,0.5,1"]);
        let Command::ConflictGrid(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.coeffs, Some(vec![0.0, 0.5, 1.0]));
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(
            &cfg,
            "model = \"svo\"\nseed = 11\n[planner]\nmax_iterations = 40\n[scenario]\nmax_time = 12.0\n",
        )
        .unwrap();
        let loaded = load_config(Some(&cfg)).unwrap();
        assert_eq!(loaded.planner.max_iterations, 40);
        assert_eq!(loaded.scenario.max_time, 12.0);
        assert_eq!(loaded.scenario.lane_width, 3.7);

        let common = Common {
            config: Some(cfg),
            ..Common::default()
        };
        let mut r = Resolved::new(&common, None).unwrap();
        assert_eq!(r.kind(&Some("altruism".into())).unwrap(), ModelKind::Altruism);
        assert_eq!(r.seed(None).unwrap(), 11);
        assert_eq!(r.seed(Some(3)).unwrap(), 3);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        fs::write(&cfg, "[planner]\nmax_iters = 3\n").unwrap();
        assert_eq!(load_config(Some(&cfg)).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn manifest_reruns_the_command() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("mc.json");
        let first = run(&parse(&[
            "aoc-mc",
            "--model",
            "svo",
            "--n",
            "5000",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]))
        .unwrap();
        let manifest = first.manifest.unwrap();
        assert_eq!(manifest, dir.path().join("mc.json.manifest.json"));
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
        assert_eq!(m.seeds, vec![9]);
        assert_eq!(m.outputs, vec![out.clone()]);

        let again = dir.path().join("again.json");
        run(&parse(&[
            "aoc-mc",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ]))
        .unwrap();
        let strip = |p: &Path| {
            let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
            v.as_object_mut().unwrap().remove("manifest");
            v
        };
        assert_eq!(strip(&out), strip(&again));
        assert!(fs::read_to_string(&out)
            .unwrap()
            .contains("\"manifest\": \"mc.json.manifest.json\""));
    }

    #[test]
    fn malformed_matrix_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("m.json");
        fs::write(&bad, "{\"cells\": [[1, 2]").unwrap();
        let out = dir.path().join("table.csv");
        let err = run(&parse(&[
            "aoc-table",
            "--matrix",
            bad.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!out.exists());
    }

    #[test]
    fn simulate_needs_two_coefficients() {
        let err = run(&parse(&[
            "simulate", "--model", "altruism", "--coeffs", "0.5", "--seed", "1",
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
