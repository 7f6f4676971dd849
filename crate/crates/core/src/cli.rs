//! Command-line front end: `run`, `sweep` and `analyze`.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or inputs, 3 when
//! more than 1% of the trajectories fail, 1 for anything else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble, DEFAULT_TRAJECTORIES};
use crate::error::{Error, Result};
use crate::io::{self, RunManifest, SweepEntry, SweepIndex};
use crate::model::{BoundaryCondition, FeedbackVariant, InitialState, ModelParams};
use crate::observables::{Observable, ObservableSet};
use crate::scaling::{
    estimate_transition_time, LogLawFit, SizeSweep, TransitionEstimate, TransitionMethod,
};
use crate::trajectory::{Engine, TrajectorySchedule};

pub const WORKERS_ENV: &str = "FEEDBACK_SKIN_WORKERS";
pub const DEFAULT_RECORDS: usize = 200;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "feedback-skin", version, about = "Trajectory ensembles of a monitored fermion chain with feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one ensemble and write observables.csv, density.csv, manifest.json.
    Run(RunArgs),
    /// Run an ensemble for every combination of the listed parameters.
    Sweep(SweepArgs),
    /// Fit log laws and estimate transition times from run outputs.
    Analyze(AnalyzeArgs),
}

/// Protocol flags shared by `run` and `sweep`.
#[derive(Debug, Clone, Default, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub hopping: Option<f64>,
    #[arg(long)]
    pub bc: Option<BoundaryCondition>,
    #[arg(long)]
    pub feedback: Option<FeedbackVariant>,
    #[arg(long)]
    pub initial: Option<InitialState>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time in units of τ.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
}

/// Ensemble flags shared by `run` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Approximate number of recorded times.
    #[arg(long)]
    pub records: Option<usize>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    /// Flat TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long = "L")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Feedback phase: radians, `pi`, or a multiple such as `0.6pi`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Single deterministic trajectory without jumps.
    #[arg(long)]
    pub no_click: bool,
    /// Repeat the run described by a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Every combination of the listed sizes, tilts, rates and phases.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "L", value_delimiter = ',', required = true)]
    pub sites: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<String>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Crossing,
    Collapse,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Sweep directories (with index.json) or run directories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "entropy_half")]
    pub observable: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Crossing)]
    pub method: MethodArg,
    /// Rescaled times at which to fit `a ln L + b`.
    #[arg(long = "fit-at", value_delimiter = ',', default_values_t = [0.5, 1.8])]
    pub fit_at: Vec<f64>,
    /// Skip the transition-time estimate.
    #[arg(long)]
    pub no_transition: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `pi`, `0.6pi`, `-0.5*pi`, `0.6π` or plain radians.
pub fn parse_theta(text: &str) -> Result<f64> {
    let t = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || Error::InvalidConfig(format!("cannot parse theta '{text}'"));
    if let Some(prefix) = t.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = match prefix {
            "" | "+" => 1.0,
            "-" => -1.0,
            p => p.parse::<f64>().map_err(|_| bad())?,
        };
        Ok(factor * std::f64::consts::PI)
    } else {
        t.parse::<f64>().map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ThetaValue {
    Radians(f64),
    Text(String),
}

/// Flat configuration file mirroring the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(rename = "L")]
    sites: Option<usize>,
    gamma: Option<f64>,
    theta: Option<ThetaValue>,
    delta: Option<f64>,
    hopping: Option<f64>,
    bc: Option<String>,
    feedback: Option<String>,
    initial: Option<String>,
    dt: Option<f64>,
    t_max: Option<f64>,
    tau: Option<f64>,
    trajectories: Option<usize>,
    seed: Option<u64>,
    records: Option<usize>,
    no_click: Option<bool>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Everything needed to launch one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPlan {
    pub params: ModelParams,
    pub schedule: TrajectorySchedule,
    pub trajectories: usize,
    pub seed: u64,
}

fn parse_enum<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(Error::InvalidConfig)
}

fn apply_config(params: &mut ModelParams, cfg: &ConfigFile) -> Result<()> {
    if let Some(l) = cfg.sites {
        params.sites = l;
        params.particles = l / 2;
    }
    if let Some(v) = cfg.gamma {
        params.gamma = v;
    }
    match &cfg.theta {
        Some(ThetaValue::Radians(v)) => params.theta = *v,
        Some(ThetaValue::Text(s)) => params.theta = parse_theta(s)?,
        None => {}
    }
    if let Some(v) = cfg.delta {
        params.tilt = v;
    }
    if let Some(v) = cfg.hopping {
        params.hopping = v;
    }
    if let Some(s) = &cfg.bc {
        params.boundary = parse_enum(s)?;
    }
    if let Some(s) = &cfg.feedback {
        params.feedback = parse_enum(s)?;
    }
    if let Some(s) = &cfg.initial {
        params.initial = parse_enum(s)?;
    }
    if let Some(v) = cfg.dt {
        params.dt = v;
    }
    if let Some(v) = cfg.t_max {
        params.t_max_over_tau = v;
    }
    if cfg.tau.is_some() {
        params.tau = cfg.tau;
    }
    Ok(())
}

fn apply_protocol_args(params: &mut ModelParams, args: &ProtocolArgs) {
    if let Some(v) = args.hopping {
        params.hopping = v;
    }
    if let Some(v) = args.bc {
        params.boundary = v;
    }
    if let Some(v) = args.feedback {
        params.feedback = v;
    }
    if let Some(v) = args.initial {
        params.initial = v;
    }
    if let Some(v) = args.dt {
        params.dt = v;
    }
    if let Some(v) = args.t_max {
        params.t_max_over_tau = v;
    }
}

/// Resolves defaults, manifest, config file and flags (in rising priority).
pub fn plan_run(args: &RunArgs) -> Result<RunPlan> {
    let cfg = match &args.ensemble.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let manifest = args.manifest.as_deref().map(RunManifest::read).transpose()?;
    let mut params = match &manifest {
        Some(m) => m.params.clone(),
        None => ModelParams::new(64),
    };
    apply_config(&mut params, &cfg)?;
    if let Some(l) = args.sites {
        params.sites = l;
        params.particles = l / 2;
    }
    if let Some(v) = args.gamma {
        params.gamma = v;
    }
    if let Some(t) = &args.theta {
        params.theta = parse_theta(t)?;
    }
    if let Some(v) = args.delta {
        params.tilt = v;
    }
    apply_protocol_args(&mut params, &args.protocol);
    params.validate()?;

    let no_click = args.no_click
        || cfg.no_click.unwrap_or(false)
        || manifest.as_ref().is_some_and(|m| m.schedule.no_click);
    let seed = args
        .ensemble
        .seed
        .or(cfg.seed)
        .or(manifest.as_ref().map(|m| m.master_seed))
        .unwrap_or(DEFAULT_SEED);
    let records = args.ensemble.records.or(cfg.records);
    let schedule = match (&manifest, records) {
        (Some(m), None) if m.params == params => m.schedule.clone(),
        _ => TrajectorySchedule::for_params(&params, records.unwrap_or(DEFAULT_RECORDS), seed),
    };
    let schedule = TrajectorySchedule {
        seed,
        stream: 0,
        ..schedule
    }
    .with_no_click(no_click);
    let trajectories = if no_click {
        1
    } else {
        args.ensemble
            .trajectories
            .or(cfg.trajectories)
            .or(manifest.as_ref().map(|m| m.n_trajectories))
            .unwrap_or(DEFAULT_TRAJECTORIES)
    };
    if trajectories == 0 {
        return Err(Error::InvalidConfig("--trajectories must be at least 1".into()));
    }
    Ok(RunPlan {
        params,
        schedule,
        trajectories,
        seed,
    })
}

/// Runs the ensemble of `plan` and writes its outputs into `out`.
pub fn execute(plan: &RunPlan, workers: usize, out: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let engine = Engine::new(&plan.params, ObservableSet::all())?;
    log::info!(
        "L={} Δ={} γ={} θ={:.6} {:?}: {} trajectories × {} steps",
        plan.params.sites,
        plan.params.tilt,
        plan.params.gamma,
        plan.params.theta,
        plan.params.boundary,
        plan.trajectories,
        plan.schedule.n_steps
    );
    let stats = run_ensemble(&engine, &plan.schedule, plan.trajectories, plan.seed, workers)?;
    let manifest = io::write_run(out, &stats, start.elapsed().as_secs_f64())?;
    log::info!("wrote {} in {:.1}s", out.display(), manifest.wall_clock_seconds);
    Ok(manifest)
}

pub fn run(args: &RunArgs) -> Result<()> {
    let plan = plan_run(args)?;
    execute(&plan, args.ensemble.workers, &args.ensemble.out)?;
    Ok(())
}

fn sweep_dir_name(p: &ModelParams) -> String {
    format!(
        "L{}_delta{}_gamma{}_theta{:.6}",
        p.sites, p.tilt, p.gamma, p.theta
    )
}

pub fn sweep(args: &SweepArgs) -> Result<SweepIndex> {
    let base_args = RunArgs {
        sites: Some(args.sites[0]),
        gamma: None,
        theta: None,
        delta: None,
        protocol: args.protocol.clone(),
        ensemble: args.ensemble.clone(),
        no_click: false,
        manifest: None,
    };
    let base = plan_run(&base_args)?;
    let deltas = if args.delta.is_empty() {
        vec![base.params.tilt]
    } else {
        args.delta.clone()
    };
    let gammas = if args.gamma.is_empty() {
        vec![base.params.gamma]
    } else {
        args.gamma.clone()
    };
    let thetas = if args.theta.is_empty() {
        vec![base.params.theta]
    } else {
        args.theta.iter().map(|s| parse_theta(s)).collect::<Result<_>>()?
    };
    let records = args.ensemble.records.unwrap_or(DEFAULT_RECORDS);
    let mut plans = Vec::new();
    for &delta in &deltas {
        for &gamma in &gammas {
            for &theta in &thetas {
                for &l in &args.sites {
                    let mut params = base.params.clone();
                    params.sites = l;
                    params.particles = l / 2;
                    params.tilt = delta;
                    params.gamma = gamma;
                    params.theta = theta;
                    params.validate()?;
                    let schedule = TrajectorySchedule::for_params(&params, records, base.seed)
                        .with_no_click(base.schedule.no_click);
                    plans.push(RunPlan {
                        params,
                        schedule,
                        trajectories: base.trajectories,
                        seed: base.seed,
                    });
                }
            }
        }
    }
    std::fs::create_dir_all(&args.ensemble.out)?;
    let mut index = SweepIndex {
        version: io::VERSION.to_string(),
        runs: Vec::new(),
    };
    for plan in &plans {
        let dir = sweep_dir_name(&plan.params);
        execute(plan, args.ensemble.workers, &args.ensemble.out.join(&dir))?;
        index.runs.push(SweepEntry {
            sites: plan.params.sites,
            tilt: plan.params.tilt,
            gamma: plan.params.gamma,
            theta: plan.params.theta,
            dir,
        });
        index.write(&args.ensemble.out.join(io::INDEX_FILE))?;
    }
    Ok(index)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLawReport {
    pub rescaled_time: f64,
    #[serde(flatten)]
    pub fit: LogLawFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub tilt: f64,
    pub gamma: f64,
    pub theta: f64,
    pub boundary: BoundaryCondition,
    pub feedback: FeedbackVariant,
    pub initial: InitialState,
    pub sizes: Vec<usize>,
    /// Headline estimate; `None` when no transition is found or none was
    /// requested.
    pub t_c_over_tau: Option<f64>,
    pub t_c_uncertainty: Option<f64>,
    pub transitions: Vec<TransitionEstimate>,
    pub log_law: Vec<LogLawReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub version: String,
    pub observable: Observable,
    pub groups: Vec<GroupReport>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<AnalysisReport> {
    let observable = Observable::from_name(&args.observable)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown observable {}", args.observable)))?;
    let runs = io::collect_runs(&args.inputs)?;
    if runs.is_empty() {
        return Err(Error::InvalidConfig("no runs found".into()));
    }
    // Group runs whose parameters differ only in L.
    let mut groups: BTreeMap<String, Vec<&io::LoadedRun>> = BTreeMap::new();
    for r in &runs {
        let mut key = r.manifest.params.clone();
        key.sites = 0;
        key.particles = 0;
        groups.entry(serde_json::to_string(&key)?).or_default().push(r);
    }
    let methods: Vec<TransitionMethod> = match args.method {
        MethodArg::Crossing => vec![TransitionMethod::Crossing],
        MethodArg::Collapse => vec![TransitionMethod::Collapse],
        MethodArg::Both => vec![TransitionMethod::Crossing, TransitionMethod::Collapse],
    };
    let mut reports = Vec::new();
    for members in groups.values() {
        let curves = members
            .iter()
            .map(|r| r.curve(observable))
            .collect::<Result<Vec<_>>>()?;
        let sweep = SizeSweep::new(observable, curves)
            .map_err(|e| Error::InvalidConfig(format!("inconsistent inputs: {e}")))?;
        let p = &members[0].manifest.params;
        let mut transitions = Vec::new();
        if !args.no_transition {
            for &m in &methods {
                let needed = if m == TransitionMethod::Crossing { 2 } else { 3 };
                if sweep.curves.len() < needed {
                    return Err(Error::InvalidConfig(format!(
                        "{m:?} transition estimate needs at least {needed} system sizes, got {:?}",
                        sweep.sizes()
                    )));
                }
                transitions.push(estimate_transition_time(&sweep, m)?);
            }
        }
        let mut log_law = Vec::new();
        if sweep.curves.len() >= 3 {
            for &s in &args.fit_at {
                log_law.push(LogLawReport {
                    rescaled_time: s,
                    fit: sweep.log_law_at(s)?,
                });
            }
        }
        let headline = transitions.first();
        reports.push(GroupReport {
            tilt: p.tilt,
            gamma: p.gamma,
            theta: p.theta,
            boundary: p.boundary,
            feedback: p.feedback,
            initial: p.initial,
            sizes: sweep.sizes(),
            t_c_over_tau: headline.and_then(TransitionEstimate::t_c_over_tau),
            t_c_uncertainty: headline.and_then(TransitionEstimate::uncertainty),
            transitions,
            log_law,
        });
    }
    Ok(AnalysisReport {
        version: io::VERSION.to_string(),
        observable,
        groups: reports,
    })
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::TooManyFailures { .. } => 3,
        Error::InvalidConfig(_)
        | Error::Format { .. }
        | Error::Analysis(_)
        | Error::StepTooLarge { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 2,
        _ => 1,
    }
}

/// Parses `args` and runs the chosen subcommand.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a).map(|_| ()),
        Command::Analyze(a) => analyze(a).and_then(|report| {
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match &a.out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    main_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn theta_forms() {
        assert_eq!(parse_theta("pi").unwrap(), PI);
        assert!((parse_theta("0.6pi").unwrap() - 0.6 * PI).abs() < 1e-15);
        assert!((parse_theta("-0.5*pi").unwrap() + 0.5 * PI).abs() < 1e-15);
        assert_eq!(parse_theta("1.25").unwrap(), 1.25);
        assert!(parse_theta("half").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "L = 16\ngamma = 0.3\ntheta = \"0.8pi\"\ntrajectories = 5\n").unwrap();
        let cli = Cli::try_parse_from([
            "feedback-skin",
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--gamma",
            "0.4",
            "--out",
            "x",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else { panic!() };
        let plan = plan_run(&args).unwrap();
        assert_eq!(plan.params.sites, 16);
        assert_eq!(plan.params.gamma, 0.4);
        assert!((plan.params.theta - 0.8 * PI).abs() < 1e-15);
        assert_eq!(plan.trajectories, 5);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "lattice = 16\n").unwrap();
        assert!(ConfigFile::read(&cfg).is_err());
    }

    #[test]
    fn no_click_forces_one_trajectory() {
        let cli = Cli::try_parse_from(["feedback-skin", "run", "--L", "8", "--no-click", "--out", "x"]).unwrap();
        let Command::Run(args) = cli.command else { panic!() };
        let plan = plan_run(&args).unwrap();
        assert_eq!(plan.trajectories, 1);
        assert!(plan.schedule.no_click);
    }
}
