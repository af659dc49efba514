//! `sfq` — command-line front end for the Security Friction Quotient
//! toolkit.
//!
//! Subcommands: `simulate` (Monte Carlo study + summary), `score` (one-off
//! scoring of observed components), `sensitivity` (rank stability and
//! tornado), `calibrate` (fit catalog parameters to target means).
//!
//! Exit codes: 0 success, 1 input or validation error, 2 usage error,
//! 3 calibration finished outside tolerance (fitted config still written).

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sfq_core::calibrate::{fit_to_targets, CalibrationTargets, MEAN_TOLERANCE};
use sfq_core::catalog::{builtin_catalog, load_config, serialize_config, SimulationConfig};
use sfq_core::metric::{
    compute_sfq, normalize, risk_index, ComponentBounds, NormalizationBounds, RawComponents, WeightVector,
};
use sfq_core::sensitivity::{
    mean_normalized, rank_stability, sample_weights, tornado, write_rank_stability_csv, write_tornado_csv, TermRanges,
};
use sfq_core::simulate::{empirical_bounds, renormalize_runs, run_monte_carlo, write_runs_csv, SimMode};
use sfq_core::stats::{format_summary_table, summarize, write_summary_csv};

use manifest::write_manifest;

/// Confidence level for all reported intervals.
const CI_LEVEL: f64 = 0.95;
/// Documented default median sign-in latency (seconds) for `score`.
const DEFAULT_SCORE_LATENCY: f64 = 0.82;
/// Documented default residual risk index for `score`, the field-deployment
/// estimate used when neither `--risk` nor `--policy` is given.
const DEFAULT_SCORE_RISK: f64 = 0.05;

#[derive(Parser)]
#[command(name = "sfq", version, about = "Security Friction Quotient toolkit", arg_required_else_help = true)]
struct Cli {
    /// Worker threads (0 = all cores). Results are identical either way.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo study and write runs.csv, summary.csv, manifest.json.
    Simulate(SimulateArgs),
    /// Score one set of observed component values.
    Score(ScoreArgs),
    /// Weight-sensitivity analyses: rank stability and tornado.
    Sensitivity(SensitivityArgs),
    /// Fit catalog deltas, effectiveness, and noise to target score means.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Aggregate,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundsMode {
    /// Normalize against the config's fixed clamp ranges (default).
    Fixed,
    /// Normalize against the observed min/max of the generated run set.
    Empirical,
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file (TOML); the builtin catalog when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per policy override.
    #[arg(long)]
    runs: Option<u64>,
    /// Simulation fidelity.
    #[arg(long, value_enum, default_value_t = Mode::Aggregate)]
    mode: Mode,
    /// Normalization bounds mode.
    #[arg(long, value_enum, default_value_t = BoundsMode::Fixed)]
    bounds_mode: BoundsMode,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Median sign-in latency in seconds.
    #[arg(long, default_value_t = DEFAULT_SCORE_LATENCY)]
    latency: f64,
    /// Failure rate in percent.
    #[arg(long)]
    failure: f64,
    /// MFA prompts per user per week.
    #[arg(long)]
    prompts: f64,
    /// Helpdesk tickets per 100 users per week.
    #[arg(long)]
    tickets: f64,
    /// Residual risk index in [0, 1]. Defaults to the documented field
    /// estimate 0.05 unless --policy supplies a catalog-derived value.
    #[arg(long, conflicts_with = "policy")]
    risk: Option<f64>,
    /// Take the residual risk from this catalog policy's effectiveness.
    #[arg(long)]
    policy: Option<String>,
    /// Config file providing weights, bounds, and the policy catalog.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override weights as five comma-separated values (w_l,w_f,w_p,w_h,w_r).
    #[arg(long)]
    weights: Option<String>,
    /// Override bounds as eight comma-separated values
    /// (l_lo,l_hi,f_lo,f_hi,p_lo,p_hi,h_lo,h_hi).
    #[arg(long)]
    bounds: Option<String>,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Config file (TOML); the builtin catalog when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per policy used to estimate mean components.
    #[arg(long)]
    runs: Option<u64>,
    /// Number of Dirichlet weight draws.
    #[arg(long, default_value_t = 10_000)]
    draws: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Config file (TOML); the builtin catalog when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Targets file: optional top-level `run_sd` plus a `[means]` table.
    #[arg(long)]
    targets: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per policy used during fitting.
    #[arg(long)]
    runs: Option<u64>,
    /// Output directory for fitted_config.toml and manifest.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<sfq_core::Error> for CliError {
    fn from(e: sfq_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("thread pool configured once");
    }
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Score(args) => cmd_score(args),
        Command::Sensitivity(args) => cmd_sensitivity(args),
        Command::Calibrate(args) => cmd_calibrate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_effective_config(path: Option<&Path>, seed: Option<u64>, runs: Option<u64>) -> Result<SimulationConfig, CliError> {
    let mut config = match path {
        None => builtin_catalog(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", p.display())))?;
            load_config(&text)?
        }
    };
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(runs) = runs {
        config.runs_per_policy = runs;
    }
    config.validate()?;
    Ok(config)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    let config = load_effective_config(args.config.as_deref(), args.seed, args.runs)?;
    let mode = match args.mode {
        Mode::Aggregate => SimMode::Aggregate,
        Mode::Trace => SimMode::Trace,
    };
    let mut runs = run_monte_carlo(&config, mode)?;
    if matches!(args.bounds_mode, BoundsMode::Empirical) {
        let bounds = empirical_bounds(&runs)?;
        runs = renormalize_runs(&runs, &bounds, &config.weights);
        println!("note: scores normalized against the empirical component ranges of this run set");
    }
    let summaries = summarize(
        &runs,
        &config.baseline_policy().id,
        CI_LEVEL,
        config.bootstrap_resamples,
        config.master_seed,
    )?;

    fs::create_dir_all(&args.out)?;
    let mut runs_csv = Vec::new();
    write_runs_csv(&mut runs_csv, &runs)?;
    fs::write(args.out.join("runs.csv"), runs_csv)?;
    let mut summary_csv = Vec::new();
    write_summary_csv(&mut summary_csv, &summaries)?;
    fs::write(args.out.join("summary.csv"), summary_csv)?;
    write_manifest(&args.out, &config, &["runs.csv", "summary.csv"])?;

    println!(
        "simulated {} runs x {} policies (seed {})",
        config.runs_per_policy,
        config.policies.len(),
        config.master_seed
    );
    print!("{}", format_summary_table(&summaries));
    println!("artifacts written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_floats(field: &str, text: &str, expected: usize) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| CliError::Input(format!("{field}: {e}")))?;
    if values.len() != expected {
        return Err(CliError::Input(format!("{field}: expected {expected} comma-separated values, got {}", values.len())));
    }
    Ok(values)
}

fn cmd_score(args: ScoreArgs) -> Result<ExitCode, CliError> {
    let config = match args.config.as_deref() {
        None => builtin_catalog(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", p.display())))?;
            load_config(&text)?
        }
    };

    let weights = match &args.weights {
        None => config.weights,
        Some(text) => {
            let v = parse_floats("weights", text, 5)?;
            WeightVector::from_array([v[0], v[1], v[2], v[3], v[4]])?
        }
    };
    let bounds = match &args.bounds {
        None => config.bounds,
        Some(text) => {
            let v = parse_floats("bounds", text, 8)?;
            NormalizationBounds {
                latency_s: ComponentBounds::new(v[0], v[1])?,
                failure_pct: ComponentBounds::new(v[2], v[3])?,
                prompts_per_user_week: ComponentBounds::new(v[4], v[5])?,
                tickets_per_100_week: ComponentBounds::new(v[6], v[7])?,
            }
        }
    };

    let risk = match (&args.policy, args.risk) {
        (Some(id), _) => {
            let policy = config
                .policies
                .iter()
                .find(|p| &p.id == id)
                .ok_or_else(|| CliError::Input(format!("policy: unknown id `{id}`")))?;
            let r = risk_index(&config.scenarios, &policy.effectiveness)?;
            println!("risk taken from policy `{id}`: {r:.6}");
            r
        }
        (None, Some(r)) => r,
        (None, None) => {
            println!("risk defaulted to {DEFAULT_SCORE_RISK} (documented field estimate)");
            DEFAULT_SCORE_RISK
        }
    };

    let raw = RawComponents::new(args.latency, args.failure, args.prompts, args.tickets, risk)?;
    let norm = normalize(&raw, &bounds);
    let sfq = compute_sfq(&norm, &weights);
    println!("l_hat = {:.6}", norm.l_hat);
    println!("f_hat = {:.6}", norm.f_hat);
    println!("p_hat = {:.6}", norm.p_hat);
    println!("h_hat = {:.6}", norm.h_hat);
    println!("r_hat = {:.6}", norm.r_hat);
    println!("sfq = {sfq:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<ExitCode, CliError> {
    let config = load_effective_config(args.config.as_deref(), args.seed, args.runs)?;
    if args.draws < 1 {
        return Err(CliError::Input("draws: must be >= 1".to_string()));
    }
    let runs = run_monte_carlo(&config, SimMode::Aggregate)?;
    let means = mean_normalized(&runs)?;
    let draws = sample_weights(args.draws, config.master_seed)?;
    let stability = rank_stability(&means, &draws)?;
    let ranges = TermRanges::from_observed(&means)?;
    let tornado_report = tornado(&means, &config.weights, &ranges)?;

    fs::create_dir_all(&args.out)?;
    let mut rank_csv = Vec::new();
    write_rank_stability_csv(&mut rank_csv, &stability)?;
    fs::write(args.out.join("rank_stability.csv"), rank_csv)?;
    let mut tornado_csv = Vec::new();
    write_tornado_csv(&mut tornado_csv, &tornado_report)?;
    fs::write(args.out.join("tornado.csv"), tornado_csv)?;

    let top = &tornado_report.term_swings[0];
    let mut summary = String::new();
    summary.push_str(&format!(
        "rank stability: {:.3} of pairwise orderings preserved across {} weight draws\n",
        stability.preserved_fraction, stability.draws
    ));
    summary.push_str(&format!(
        "reference order (ascending equal-weight score): {}\n",
        stability.reference_order.join(" < ")
    ));
    summary.push_str(&format!("top swing component: {} (swing {:.4})\n", top.term.id(), top.max_swing));
    for ts in &tornado_report.term_swings {
        summary.push_str(&format!("  {:<14} max swing {:.4}, rank changes {}\n", ts.term.id(), ts.max_swing, ts.rank_changes));
    }
    fs::write(args.out.join("sensitivity_summary.txt"), &summary)?;
    write_manifest(&args.out, &config, &["rank_stability.csv", "tornado.csv", "sensitivity_summary.txt"])?;

    print!("{summary}");
    println!("artifacts written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<ExitCode, CliError> {
    let config = load_effective_config(args.config.as_deref(), args.seed, args.runs)?;
    let targets_text = fs::read_to_string(&args.targets)
        .map_err(|e| CliError::Input(format!("cannot read targets {}: {e}", args.targets.display())))?;
    let targets = CalibrationTargets::parse(&targets_text)?;
    let outcome = fit_to_targets(&config, &targets)?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("fitted_config.toml"), serialize_config(&outcome.config))?;
    write_manifest(&args.out, &outcome.config, &["fitted_config.toml"])?;

    println!("calibration finished after {} sweeps (objective {:.6})", outcome.sweeps, outcome.objective);
    println!("{:<28} {:>10} {:>10} {:>10}", "policy", "mean", "target", "residual");
    for (id, residual) in &outcome.mean_residuals {
        let target = targets.means[id];
        println!("{id:<28} {:>10.4} {target:>10.4} {residual:>+10.5}", target + residual);
    }
    match outcome.target_run_sd {
        Some(sd_t) => println!(
            "run sd: achieved {:.5} (target {:.5}, {:+.1}%)",
            outcome.achieved_run_sd,
            sd_t,
            100.0 * (outcome.achieved_run_sd / sd_t - 1.0)
        ),
        None => println!("run sd: achieved {:.5} (no target)", outcome.achieved_run_sd),
    }
    println!("fitted config written to {}", args.out.join("fitted_config.toml").display());

    if outcome.within_tolerance {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "warning: best-effort fit outside tolerance (mean tolerance {MEAN_TOLERANCE}); config written anyway"
        );
        Ok(ExitCode::from(3))
    }
}
