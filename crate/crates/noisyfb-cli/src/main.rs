//! Command-line frontend: every experiment is a reproducible command with
//! machine-readable output (JSON reports, CSV sweeps).
//!
//! Exit codes: 0 success, 1 configuration/parse failure, 2 infeasible
//! parameters, 3 audit invariant violation.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use noisyfb::analysis;
use noisyfb::exponents;
use noisyfb::montecarlo::{self, SimTarget, TrialPlan};
use noisyfb::schemes::{Mode, SystemParams};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "noisyfb",
    version,
    about = "Interactive coding over AWGN with noisy AWGN feedback: simulator and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo simulation of one operating point (JSON report).
    Simulate(SimulateArgs),
    /// Capacity-gap sweep over round counts (CSV).
    GapSweep(GapSweepArgs),
    /// Error-exponent sweep over a rate grid (CSV).
    Exponent(ExponentArgs),
    /// Coupling, aliasing and power audit (JSON; exit 3 on violations).
    Audit(AuditArgs),
    /// Reproduce one trial bit-exactly with full traces (JSON).
    Replay(ReplayArgs),
}

/// JSON experiment configuration; command-line flags override its fields.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    snr_db: Option<f64>,
    dsnr_db: Option<f64>,
    rate: Option<f64>,
    n_rounds: Option<usize>,
    target_pe: Option<f64>,
    trials: Option<f64>,
    master_seed: Option<u64>,
    mode: Option<String>,
    output_path: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON configuration file; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Feedback-over-feedforward SNR advantage in dB.
    #[arg(long)]
    dsnr_db: Option<f64>,
    /// Rate in bits per channel use.
    #[arg(long)]
    rate: Option<f64>,
    /// Number of interaction rounds N (derived from the sweep if omitted).
    #[arg(long, short = 'n')]
    n: Option<usize>,
    /// Target error probability.
    #[arg(long = "pe")]
    pe: Option<f64>,
    /// Feedforward SNR in dB (derived from the error bound if omitted).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Master seed (default: NOISYFB_SEED environment variable, else 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (default: stdout).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Rayon worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trial count (accepts scientific notation, e.g. 3e8). Default:
    /// 30 / target_pe.
    #[arg(long)]
    trials: Option<f64>,
    /// Which system to run.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Simulate a baseline instead of the noisy-feedback scheme.
    #[arg(long, value_parser = ["sk"])]
    baseline: Option<String>,
    /// Fast preset: target_pe = 1e-4 (for CI runners).
    #[arg(long)]
    fast: bool,
    /// Zero all channel noises (determinism/bring-up checks).
    #[arg(long)]
    zero_noise: bool,
}

#[derive(Args, Debug)]
struct GapSweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest round count in the sweep.
    #[arg(long, default_value_t = 40)]
    n_max: usize,
    /// Comma-separated dsnr grid in dB (overrides --dsnr-db).
    #[arg(long, value_delimiter = ',')]
    dsnr_grid: Vec<f64>,
}

#[derive(Args, Debug)]
struct ExponentArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of rate grid points strictly between 0 and capacity.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Largest round count K in the exponent optimization.
    #[arg(long, default_value_t = 64)]
    k_max: usize,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trial count (accepts scientific notation).
    #[arg(long)]
    trials: Option<f64>,
    /// Run the harness self-test with deliberately mismatched tapes; the
    /// audit must then report violations.
    #[arg(long)]
    negative_control: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trial index to reproduce.
    #[arg(long)]
    trial: u64,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Replay the S-K baseline instead.
    #[arg(long, value_parser = ["sk"])]
    baseline: Option<String>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "modulo" => Ok(Mode::Modulo),
        "coupled" => Ok(Mode::Coupled),
        "both" => Ok(Mode::Both),
        other => Err(format!("mode must be modulo|coupled|both, got {other}")),
    }
}

/// Error classes mapped to exit codes.
enum CliError {
    Config(anyhow::Error),
    Infeasible(anyhow::Error),
    AuditViolation,
}

impl From<noisyfb::Error> for CliError {
    fn from(e: noisyfb::Error) -> CliError {
        match e {
            noisyfb::Error::Infeasible(_) => CliError::Infeasible(anyhow!(e)),
            other => CliError::Config(anyhow!(other)),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            // help/version are not failures; anything else is a config
            // parse failure
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::GapSweep(args) => cmd_gap_sweep(args),
        Command::Exponent(args) => cmd_exponent(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Infeasible(e)) => {
            eprintln!("infeasible: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::AuditViolation) => {
            eprintln!("audit: invariant violation detected");
            ExitCode::from(3)
        }
    }
}

/// Experiment parameters after merging config file, flags and environment.
struct Resolved {
    sys: SystemParams,
    rate: f64,
    target_pe: f64,
    master_seed: u64,
    trials: u64,
    output: Option<PathBuf>,
    snr_was_derived: bool,
    n_was_derived: bool,
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))
                .map_err(CliError::Config)?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))
                .map_err(CliError::Config)
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("NOISYFB_SEED").ok().and_then(|s| s.parse().ok())
}

fn install_workers(workers: Option<usize>) -> Result<(), CliError> {
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("initializing worker pool")
            .map_err(CliError::Config)?;
    }
    Ok(())
}

fn resolve(
    common: &CommonArgs,
    trials_flag: Option<f64>,
    pe_override: Option<f64>,
) -> Result<Resolved, CliError> {
    let cfg = load_config(&common.config)?;
    let dsnr_db = common
        .dsnr_db
        .or(cfg.dsnr_db)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: dsnr_db")))?;
    let rate = common
        .rate
        .or(cfg.rate)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: rate")))?;
    let target_pe = pe_override
        .or(common.pe)
        .or(cfg.target_pe)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: target_pe")))?;
    if !(target_pe > 0.0 && target_pe < 1.0) {
        return Err(CliError::Config(anyhow!(
            "target_pe must be in (0,1), got {target_pe}"
        )));
    }
    let dsnr = 10f64.powf(dsnr_db / 10.0);

    // N: given, or the sweep's best marked round count
    let (n_rounds, n_was_derived) = match common.n.or(cfg.n_rounds) {
        Some(n) => (n, false),
        None => {
            let sweep = analysis::gap_sweep(rate, 40, target_pe, dsnr).map_err(CliError::from)?;
            let n = sweep
                .n_opt
                .ok_or_else(|| noisyfb::Error::Infeasible("no feasible round count".into()))
                .map_err(CliError::from)?;
            (n, true)
        }
    };
    // snr: given, or the smallest snr meeting the error bound
    let (snr, snr_was_derived) = match common.snr_db.or(cfg.snr_db) {
        Some(db) => (10f64.powf(db / 10.0), false),
        None => (
            analysis::snr_for_target_rate(rate, n_rounds, target_pe, dsnr)
                .map_err(CliError::from)?,
            true,
        ),
    };
    let sys = SystemParams::new(snr, snr * dsnr, 1.0, 1.0, n_rounds).map_err(CliError::from)?;
    // the N*rate integrality contract is validated up front so rejected
    // configs name the offending combination
    noisyfb::schemes::message_bits(n_rounds, rate).map_err(CliError::from)?;

    let master_seed = common.seed.or(cfg.master_seed).or_else(env_seed).unwrap_or(0);
    let trials_f = trials_flag.or(cfg.trials).unwrap_or_else(|| (30.0 / target_pe).ceil());
    if !(trials_f >= 1.0 && trials_f.is_finite() && trials_f <= 1e12) {
        return Err(CliError::Config(anyhow!("trials out of range: {trials_f}")));
    }
    let output = common
        .output
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    Ok(Resolved {
        sys,
        rate,
        target_pe,
        master_seed,
        trials: trials_f as u64,
        output,
        snr_was_derived,
        n_was_derived,
    })
}

fn emit(output: &Option<PathBuf>, data: &str) -> Result<(), CliError> {
    match output {
        None => {
            print!("{data}");
            Ok(())
        }
        Some(p) => std::fs::write(p, data)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(CliError::Config),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    install_workers(args.common.workers)?;
    let cfg = load_config(&args.common.config)?;
    let pe_override = args.fast.then_some(1e-4);
    let resolved = resolve(&args.common, args.trials, pe_override)?;
    let mode = args
        .mode
        .or_else(|| cfg.mode.as_deref().and_then(|m| parse_mode(m).ok()))
        .unwrap_or(Mode::Modulo);
    let target = match args.baseline.as_deref() {
        Some("sk") => SimTarget::SchalkwijkKailath { sys: resolved.sys, rate: resolved.rate },
        _ => SimTarget::NoisyFeedback {
            sys: resolved.sys,
            rate: resolved.rate,
            target_pe: resolved.target_pe,
            mode,
        },
    };
    let plan = TrialPlan {
        master_seed: resolved.master_seed,
        trials: resolved.trials,
        target,
        zero_noise: args.zero_noise,
        confidence: 0.95,
    };
    let report = montecarlo::estimate(&plan).map_err(CliError::from)?;
    let envelope = serde_json::json!({
        "config": {
            "snr_db": 10.0 * resolved.sys.snr().log10(),
            "snr_derived": resolved.snr_was_derived,
            "dsnr_db": 10.0 * resolved.sys.dsnr().log10(),
            "rate": resolved.rate,
            "n_rounds": resolved.sys.n_rounds,
            "n_derived": resolved.n_was_derived,
            "target_pe": resolved.target_pe,
            "master_seed": resolved.master_seed,
            "trials": resolved.trials,
        },
        "report": report,
    });
    let mut text = serde_json::to_string_pretty(&envelope).expect("report serializes");
    text.push('\n');
    emit(&resolved.output, &text)?;
    eprintln!("wallclock: {:.3} s", report.wallclock);
    Ok(())
}

fn cmd_gap_sweep(args: GapSweepArgs) -> Result<(), CliError> {
    install_workers(args.common.workers)?;
    let cfg = load_config(&args.common.config)?;
    let rate = args
        .common
        .rate
        .or(cfg.rate)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: rate")))?;
    let pe = args
        .common
        .pe
        .or(cfg.target_pe)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: target_pe")))?;
    let mut grid = args.dsnr_grid.clone();
    if grid.is_empty() {
        let dsnr_db = args
            .common
            .dsnr_db
            .or(cfg.dsnr_db)
            .ok_or_else(|| CliError::Config(anyhow!("missing field: dsnr_db")))?;
        grid.push(dsnr_db);
    }
    let mut out =
        String::from("n,dsnr_db,snr_db,rate,gap_bound_db,gap_approx_db,feasible,n_opt\n");
    for &dsnr_db in &grid {
        let sweep = analysis::gap_sweep(rate, args.n_max, pe, 10f64.powf(dsnr_db / 10.0))
            .map_err(CliError::from)?;
        for row in &sweep.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.n_rounds,
                row.dsnr_db,
                row.snr_db,
                row.rate,
                row.gap_bound_db,
                row.gap_approx_db,
                row.feasible as u8,
                row.n_opt as u8
            ));
        }
    }
    let output = args
        .common
        .output
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    emit(&output, &out)
}

fn cmd_exponent(args: ExponentArgs) -> Result<(), CliError> {
    install_workers(args.common.workers)?;
    let cfg = load_config(&args.common.config)?;
    let snr_db = args
        .common
        .snr_db
        .or(cfg.snr_db)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: snr_db")))?;
    let dsnr_db = args
        .common
        .dsnr_db
        .or(cfg.dsnr_db)
        .ok_or_else(|| CliError::Config(anyhow!("missing field: dsnr_db")))?;
    let snr = 10f64.powf(snr_db / 10.0);
    let dsnr = 10f64.powf(dsnr_db / 10.0);
    if args.grid == 0 {
        return Err(CliError::Config(anyhow!("grid must be positive")));
    }
    let capacity = noisyfb::numerics::capacity(snr).map_err(CliError::from)?;
    // grid inside (0, C) plus two diagnostics rows at and above capacity
    let mut rates: Vec<f64> =
        (1..=args.grid).map(|i| capacity * i as f64 / (args.grid + 1) as f64).collect();
    rates.push(capacity);
    rates.push(capacity * 1.1);
    let rows = exponents::exponent_sweep(snr, dsnr, &rates, args.k_max).map_err(CliError::from)?;
    let cl_zero = exponents::chance_love_zero_rate(snr, dsnr).map_err(CliError::from)?;
    let mut out =
        String::from("rate,e_sp,e_r,e_fb,k_star,l_star,e_cl_zero_rate,above_capacity\n");
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.rate_bits,
            row.e_sp,
            row.e_r,
            row.e_fb,
            row.k_star,
            row.l_star,
            cl_zero,
            row.above_capacity as u8
        ));
    }
    let output = args
        .common
        .output
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    emit(&output, &out)
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    install_workers(args.common.workers)?;
    let resolved = resolve(&args.common, args.trials, None)?;
    let plan = TrialPlan {
        master_seed: resolved.master_seed,
        trials: resolved.trials,
        target: SimTarget::NoisyFeedback {
            sys: resolved.sys,
            rate: resolved.rate,
            target_pe: resolved.target_pe,
            mode: Mode::Both,
        },
        zero_noise: false,
        confidence: 0.95,
    };
    let audit = if args.negative_control {
        montecarlo::coupling_audit_negative_control(&plan).map_err(CliError::from)?
    } else {
        montecarlo::coupling_audit(&plan).map_err(CliError::from)?
    };
    // Terminal B power must sit within 4 sigma of its dither moment
    let p_fb = resolved.sys.feedback_power;
    let trials = audit.report.trials as f64;
    let n = resolved.sys.n_rounds as f64;
    let sigma = p_fb * (0.8 / (trials * (n - 1.0))).sqrt();
    let b_power = audit.report.power.feedback_avg_per_active_round;
    let power_ok = (b_power - p_fb).abs() < 4.0 * sigma;

    let envelope = serde_json::json!({
        "trials": audit.trials,
        "coupling_violations": audit.violations,
        "first_violation": audit.first_violation,
        "negative_control": args.negative_control,
        "feedback_power_ok": power_ok,
        "report": audit.report,
    });
    let mut text = serde_json::to_string_pretty(&envelope).expect("audit serializes");
    text.push('\n');
    emit(&resolved.output, &text)?;
    let healthy = if args.negative_control { !audit.passed() } else { audit.passed() };
    if !healthy || !power_ok {
        return Err(CliError::AuditViolation);
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.common, None, None)?;
    let target = match args.baseline.as_deref() {
        Some("sk") => SimTarget::SchalkwijkKailath { sys: resolved.sys, rate: resolved.rate },
        _ => SimTarget::NoisyFeedback {
            sys: resolved.sys,
            rate: resolved.rate,
            target_pe: resolved.target_pe,
            mode: args.mode.unwrap_or(Mode::Both),
        },
    };
    let record =
        montecarlo::replay(resolved.master_seed, args.trial, &target).map_err(CliError::from)?;
    let mut text = serde_json::to_string_pretty(&record).expect("replay serializes");
    text.push('\n');
    emit(&resolved.output, &text)
}
