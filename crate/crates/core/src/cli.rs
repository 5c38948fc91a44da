//! Command-line front end: `synth`, `extract`, `regen`, `rl` and `metrics`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dmp::{fit_model_on, rollout_on, BasisConfig, DynamicFeatures, PhaseGrid};
use crate::error::{Error, Result};
use crate::export::{
    load_json, save_comparison_csv, save_episode_jsonl, save_json, save_learning_curve_csv, save_surface_csv,
    FeaturesRecord, MetricsRecord, MetricsReport, SurfaceSummary,
};
use crate::extract::{extract_features, ExtractionConfig, GridSpec, HEURISTIC_FEATURES};
use crate::io::{load_kinematic_csv, load_trajectory, save_demo_csv, save_kinematic_csv, TrajectoryFormat};
use crate::objective::{evaluate_metrics, DEFAULT_K_GAIN};
use crate::rl::{demo_task, search_policy_with, CemConfig};
use crate::savgol::{EdgeMode, SavGol};
use crate::synth::{synthesize, SynthSpec};
use crate::trajectory::{
    normalize_demo_with_steps, smooth_with, KinematicTrajectory, DEFAULT_SG_ORDER, DEFAULT_SG_WINDOW,
    DEFAULT_UNIT_STEPS,
};
use crate::vec3::Vec3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Exit status for an error: 1 for unreadable or malformed input, 2 for
/// numerical failure, 3 for violated preconditions.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. }
        | Error::MalformedFile { .. }
        | Error::NonMonotonicTime { .. }
        | Error::Json(_)
        | Error::InvalidConfig(_)
        | Error::InvalidSpec(_) => EXIT_IO,
        Error::NoFiniteCell | Error::NumericalBlowup { .. } => EXIT_NUMERIC,
        Error::InsufficientDemos(_)
        | Error::TooShort { .. }
        | Error::WindowTooLarge { .. }
        | Error::InvalidWindow { .. }
        | Error::UndefinedForZeroStiffness
        | Error::GridMismatch(_)
        | Error::InvalidFeatures(_) => EXIT_PRECONDITION,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlSettings {
    pub iterations: usize,
    pub population: usize,
    pub elite_fraction: f64,
    pub initial_sd: f64,
    pub sd_floor: f64,
    /// Start the search from the demo's fitted weights instead of zero.
    pub warm_start: bool,
}

impl Default for RlSettings {
    fn default() -> Self {
        let cem = CemConfig::default();
        Self {
            iterations: cem.iterations,
            population: cem.population,
            elite_fraction: cem.elite_fraction,
            initial_sd: cem.initial_sd,
            sd_floor: cem.sd_floor,
            warm_start: true,
        }
    }
}

impl RlSettings {
    pub fn cem(&self) -> CemConfig {
        CemConfig {
            iterations: self.iterations,
            population: self.population,
            elite_fraction: self.elite_fraction,
            initial_sd: self.initial_sd,
            sd_floor: self.sd_floor,
        }
    }
}

/// Settings shared by every command. Unset fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Demonstration CSVs. Empty means every `demo_*.csv` under `<out>/demos`.
    pub demo_paths: Vec<PathBuf>,
    pub synth: SynthSpec,
    pub sg_window: usize,
    pub sg_order: usize,
    pub sg_edge: EdgeMode,
    pub bf_count: usize,
    pub canonical_decay: f64,
    pub k_gain: f64,
    pub d_m_grid: GridSpec,
    pub k_m_grid: GridSpec,
    pub refine: bool,
    pub refine_max_iterations: usize,
    pub refine_tol: f64,
    pub steps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub rl: RlSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ex = ExtractionConfig::default();
        Self {
            demo_paths: Vec::new(),
            synth: SynthSpec::default(),
            sg_window: DEFAULT_SG_WINDOW,
            sg_order: DEFAULT_SG_ORDER,
            sg_edge: EdgeMode::default(),
            bf_count: ex.basis_count,
            canonical_decay: ex.canonical_decay,
            k_gain: DEFAULT_K_GAIN,
            d_m_grid: ex.d_m_grid,
            k_m_grid: ex.k_m_grid,
            refine: ex.refine,
            refine_max_iterations: ex.refine_max_iterations,
            refine_tol: ex.refine_tol,
            steps: DEFAULT_UNIT_STEPS,
            seed: 0,
            out: PathBuf::from("out"),
            rl: RlSettings::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML document if the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
        } else {
            Ok(serde_json::from_str(&text)?)
        }
    }

    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            d_m_grid: self.d_m_grid,
            k_m_grid: self.k_m_grid,
            k_gain: self.k_gain,
            basis_count: self.bf_count,
            canonical_decay: self.canonical_decay,
            refine: self.refine,
            refine_max_iterations: self.refine_max_iterations,
            refine_tol: self.refine_tol,
        }
    }

    pub fn basis(&self) -> Result<BasisConfig> {
        BasisConfig::new(self.bf_count, self.canonical_decay)
    }

    pub fn filter(&self) -> Result<SavGol> {
        Ok(SavGol::new(self.sg_window, self.sg_order)?.with_edge(self.sg_edge))
    }

    pub fn demos_dir(&self) -> PathBuf {
        self.out.join("demos")
    }

    pub fn features_path(&self) -> PathBuf {
        self.out.join("features.json")
    }

    /// Configured demo paths, or the synthesized ones under the output
    /// directory in name order.
    pub fn resolve_demo_paths(&self) -> Result<Vec<PathBuf>> {
        if !self.demo_paths.is_empty() {
            return Ok(self.demo_paths.clone());
        }
        let dir = self.demos_dir();
        let entries = match std::fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&dir, e)),
        };
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with("demo_") && name.ends_with(".csv") {
                paths.push(path);
            }
        }
        paths.sort();
        Ok(paths)
    }

    /// Loads, smooths and normalizes one recording. Also returns the smoothed
    /// start, which is the origin of the normalized frame.
    pub fn prepare(&self, path: &Path) -> Result<(KinematicTrajectory, Vec3)> {
        let raw = load_trajectory(path, TrajectoryFormat::Csv)?;
        let smoothed = smooth_with(&raw, &self.filter()?)?;
        if self.steps < 3 {
            return Err(Error::InvalidConfig(format!("steps {} must be >= 3", self.steps)));
        }
        Ok((normalize_demo_with_steps(&smoothed, self.steps), smoothed.start()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "dmp-features", version, about = "Learn movement primitives from demonstrations and extract their dynamic features")]
pub struct Cli {
    /// Run configuration file (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic demonstrations with known dynamic features.
    Synth(SynthArgs),
    /// Extract damping and stiffness ratios from demonstrations.
    Extract(ExtractArgs),
    /// Regenerate a demonstration at the extracted and baseline features.
    Regen(RegenArgs),
    /// Search a forcing policy for a demonstration's goal.
    Rl(RlArgs),
    /// Compare a regenerated trajectory with a demonstration.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: Option<usize>,
    /// Relative weight noise.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub d_m: Option<f64>,
    #[arg(long)]
    pub k_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Demonstration CSVs (default: the synthesized demos in the output directory).
    pub demos: Vec<PathBuf>,
    #[arg(long)]
    pub k_gain: Option<f64>,
    /// Points per grid axis.
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// Report the best grid cell without simplex refinement.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Args)]
pub struct RegenArgs {
    /// Demonstration CSV (default: the first demo).
    #[arg(long)]
    pub demo: Option<PathBuf>,
    /// Features JSON (default: `<out>/features.json`).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// New goal in the demo's frame, as `x,y,z`.
    #[arg(long, value_parser = parse_vec3)]
    pub goal: Option<Vec3>,
}

#[derive(Debug, Args)]
pub struct RlArgs {
    #[arg(long)]
    pub demo: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    /// Start the search from zero weights.
    #[arg(long)]
    pub cold_start: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Regenerated trajectory (kinematic CSV on the unit grid).
    #[arg(long)]
    pub regen: PathBuf,
    /// Demonstration CSV.
    #[arg(long)]
    pub demo: PathBuf,
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers, got {s:?}")),
    }
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    match cli.command {
        Command::Synth(args) => cmd_synth(config, args),
        Command::Extract(args) => cmd_extract(config, args),
        Command::Regen(args) => cmd_regen(config, args),
        Command::Rl(args) => cmd_rl(config, args),
        Command::Metrics(args) => cmd_metrics(config, args),
    }
}

#[derive(Serialize)]
struct TruthRecord<'a> {
    #[serde(flatten)]
    features: FeaturesRecord,
    seed: u64,
    goals: Vec<Vec3>,
    spec: &'a SynthSpec,
}

pub fn cmd_synth(mut config: RunConfig, args: SynthArgs) -> Result<()> {
    let spec = &mut config.synth;
    if let Some(n) = args.count {
        spec.count = n;
    }
    if let Some(noise) = args.noise {
        spec.noise = noise;
    }
    if let Some(d) = args.d_m {
        spec.d_m = d;
    }
    if let Some(k) = args.k_m {
        spec.k_m = k;
    }
    let spec = &config.synth;
    let demos = synthesize(spec, config.seed)?;
    let dir = config.demos_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dt = spec.duration / spec.steps as f64;
    for (i, demo) in demos.iter().enumerate() {
        let path = dir.join(format!("demo_{:03}.csv", i + 1));
        save_demo_csv(&path, &demo.physical_positions(spec.start), dt)?;
    }
    let truth = TruthRecord {
        features: FeaturesRecord::new(&spec.features()?)?,
        seed: config.seed,
        goals: demos.iter().map(|d| d.model.goal + spec.start).collect(),
        spec,
    };
    save_json(&config.out.join("truth.json"), &truth)?;
    eprintln!("wrote {} demos to {}", demos.len(), dir.display());
    Ok(())
}

pub fn cmd_extract(mut config: RunConfig, args: ExtractArgs) -> Result<()> {
    if !args.demos.is_empty() {
        config.demo_paths = args.demos;
    }
    if let Some(k) = args.k_gain {
        config.k_gain = k;
    }
    if let Some(n) = args.grid_count {
        config.d_m_grid.count = n;
        config.k_m_grid.count = n;
    }
    if args.no_refine {
        config.refine = false;
    }
    let paths = config.resolve_demo_paths()?;
    if paths.len() < 2 {
        return Err(Error::InsufficientDemos(paths.len()));
    }
    let demos: Vec<KinematicTrajectory> = paths
        .iter()
        .map(|p| config.prepare(p).map(|(d, _)| d))
        .collect::<Result<_>>()?;
    let ex = extract_features(&demos, &config.extraction())?;
    save_json(&config.features_path(), &FeaturesRecord::new(&ex.features)?)?;
    save_surface_csv(&config.out.join("surface.csv"), &ex.surface)?;
    save_json(&config.out.join("surface.json"), &SurfaceSummary::new(&ex.surface, demos.len()))?;
    println!(
        "D_M = {:.4}, K_M = {:.4}, zeta = {:.4} ({} demos)",
        ex.features.d_m,
        ex.features.k_m,
        ex.zeta,
        demos.len()
    );
    Ok(())
}

fn demo_path(config: &RunConfig, explicit: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    config
        .resolve_demo_paths()?
        .into_iter()
        .next()
        .ok_or(Error::InsufficientDemos(0))
}

fn load_features(config: &RunConfig, explicit: Option<PathBuf>) -> Result<DynamicFeatures> {
    let path = explicit.unwrap_or_else(|| config.features_path());
    load_json::<FeaturesRecord>(&path)?.features()
}

pub fn cmd_regen(config: RunConfig, args: RegenArgs) -> Result<()> {
    let features = load_features(&config, args.features)?;
    let (demo, origin) = config.prepare(&demo_path(&config, args.demo)?)?;
    // The demo frame is shifted so the smoothed start sits at the origin.
    let goal = args.goal.map(|g| g - origin);
    let grid = PhaseGrid::new(&config.basis()?, demo.steps())?;

    let regenerate = |f: DynamicFeatures| -> Result<(KinematicTrajectory, MetricsRecord)> {
        let (model, _) = fit_model_on(&grid, &demo, f)?;
        let regen = rollout_on(&grid, &model, &f, goal)?;
        let metrics = evaluate_metrics(&regen, &demo)?;
        Ok((regen, MetricsRecord::new("Ours", &f, metrics)))
    };
    let (regen, ours) = regenerate(features)?;
    save_kinematic_csv(&config.out.join("regen.csv"), &regen)?;
    save_json(&config.out.join("metrics.json"), &ours)?;

    let mut table = vec![ours];
    for (name, d, k) in HEURISTIC_FEATURES {
        let (_, mut row) = regenerate(DynamicFeatures::ratios(d, k)?)?;
        row.method = name.to_string();
        table.push(row);
    }
    save_comparison_csv(&config.out.join("comparison.csv"), &table)?;
    save_json(&config.out.join("comparison.json"), &table)?;
    let m = &table[0].metrics;
    println!("d_mean = {:.3} mm, a_peak = {:.3} m/s^2", m.d_mean_mm, m.a_peak);
    Ok(())
}

#[derive(Serialize)]
struct RlSummary {
    #[serde(flatten)]
    features: FeaturesRecord,
    goal: Vec3,
    goal_error_m: f64,
    goal_error_mm: f64,
    total_return: f64,
    terminal_reward: f64,
    action_limit: f64,
    clamped_steps: usize,
    iterations: usize,
    population: usize,
    seed: u64,
    warm_start: bool,
}

pub fn cmd_rl(mut config: RunConfig, args: RlArgs) -> Result<()> {
    if let Some(n) = args.iterations {
        config.rl.iterations = n;
    }
    if let Some(n) = args.population {
        config.rl.population = n;
    }
    if args.cold_start {
        config.rl.warm_start = false;
    }
    let features = load_features(&config, args.features)?;
    let (demo, _) = config.prepare(&demo_path(&config, args.demo)?)?;
    let basis = config.basis()?;
    let (env, model) = demo_task(&demo, features, &basis)?;
    let init = config.rl.warm_start.then_some(&model.weights);
    let search = search_policy_with(&env, &basis, &config.rl.cem(), init, config.seed)?;
    save_episode_jsonl(&config.out.join("episode.jsonl"), &search.episode)?;
    save_learning_curve_csv(&config.out.join("learning_curve.csv"), &search.learning_curve)?;
    let err = search.episode.goal_error(env.goal);
    let summary = RlSummary {
        features: FeaturesRecord::new(&features)?,
        goal: env.goal,
        goal_error_m: err,
        goal_error_mm: err * 1e3,
        total_return: search.episode.total_return,
        terminal_reward: search.episode.terminal_reward,
        action_limit: env.action_limit,
        clamped_steps: search.episode.clamped_steps,
        iterations: config.rl.iterations,
        population: config.rl.population,
        seed: config.seed,
        warm_start: config.rl.warm_start,
    };
    save_json(&config.out.join("rl.json"), &summary)?;
    println!("best return = {:.6}, goal error = {:.3} mm", summary.total_return, summary.goal_error_mm);
    Ok(())
}

pub fn cmd_metrics(config: RunConfig, args: MetricsArgs) -> Result<()> {
    let regen = load_kinematic_csv(&args.regen)?;
    let (demo, _) = config.prepare(&args.demo)?;
    let report = MetricsReport::from(evaluate_metrics(&regen, &demo)?);
    save_json(&config.out.join("metrics.json"), &report)?;
    println!("d_mean = {:.3} mm, a_peak = {:.3} m/s^2", report.d_mean_mm, report.a_peak);
    Ok(())
}
