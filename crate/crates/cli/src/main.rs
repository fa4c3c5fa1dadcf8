//! `noma`: sweeps, slope reports and single-point simulations for uplink
//! NOMA outage under impulsive noise.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use noma_core::montecarlo::McOptions;
use noma_core::{
    diversity_report, estimate_outage_with, estimate_tdma_outage_with, run_sweep,
    write_diversity_csv, AnalyticOptions, ConfigFile, Engine, Grid, RateScaling, SweepKind,
    SweepResult, SweepRow, SweepSpec, SystemConfig, ValidationReport, Window,
};

/// Default rho_w and a1 for back-off sweeps.
const BACKOFF_RHO_W_DB: f64 = 15.0;
const BACKOFF_A1: f64 = 1.0;

#[derive(Parser)]
#[command(
    name = "noma",
    version,
    about = "Outage analysis of uplink NOMA under impulsive noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print derived quantities and closed-form validity flags.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Outage versus background SNR rho_w (dB).
    SweepSnr(SweepArgs),
    /// Outage versus power back-off beta (dB).
    SweepBackoff(SweepArgs),
    /// Finite-SNR diversity slopes of the analytic curves.
    Diversity {
        #[arg(long)]
        config: PathBuf,
        /// Fitting window LO:HI in dB.
        #[arg(long)]
        window: Window,
        /// SNR grid START:STOP:STEP in dB [default: 0:60:1].
        #[arg(long)]
        grid: Option<Grid>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo outage at the configured operating point.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also simulate the TDMA baseline with this rate scaling.
        #[arg(long)]
        tdma_rate_scaling: Option<RateScaling>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Grid START:STOP:STEP in dB [default: 0:45:1 for SNR, 0:10:0.5 for back-off].
    #[arg(long)]
    grid: Option<Grid>,
    /// Comma list of analytic, montecarlo, tdma, tdma-montecarlo.
    #[arg(long, default_value = "analytic")]
    engines: String,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "slots")]
    tdma_rate_scaling: RateScaling,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Versions {
    noma_cli: &'static str,
    noma_core: &'static str,
}

/// Run metadata written next to every output file.
#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'static str,
    config_path: &'a Path,
    config: &'a SystemConfig,
    #[serde(flatten)]
    run: T,
    workers: usize,
    versions: Versions,
}

fn load_config(path: &Path, fill: impl FnOnce(ConfigFile) -> ConfigFile) -> Result<SystemConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let file = ConfigFile::parse(&text)?;
    Ok(fill(file).to_system_config()?)
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

fn write_outputs<T: Serialize>(
    out: Option<&Path>,
    body: &[u8],
    command: &'static str,
    config_path: &Path,
    config: &SystemConfig,
    run: T,
) -> Result<()> {
    let Some(out) = out else {
        io::stdout().write_all(body)?;
        return Ok(());
    };
    fs::write(out, body).with_context(|| format!("cannot write {}", out.display()))?;
    let meta = Sidecar {
        command,
        config_path,
        config,
        run,
        workers: match McOptions::from_env().workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        },
        versions: Versions {
            noma_cli: env!("CARGO_PKG_VERSION"),
            noma_core: noma_core::VERSION,
        },
    };
    let side = sidecar_path(out);
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    fs::write(&side, json).with_context(|| format!("cannot write {}", side.display()))?;
    Ok(())
}

fn sweep(kind: SweepKind, args: SweepArgs) -> Result<()> {
    let command = match kind {
        SweepKind::Snr => "sweep-snr",
        SweepKind::Backoff => "sweep-backoff",
    };
    let grid = args.grid.unwrap_or_else(|| kind.default_grid());
    let config = load_config(&args.config, |f| match kind {
        // rho_w_db is overwritten by every grid point
        SweepKind::Snr => f.or_rho_w_db(grid.values()[0]),
        SweepKind::Backoff => f.or_a1(BACKOFF_A1).or_rho_w_db(BACKOFF_RHO_W_DB),
    })?;
    let engines = Engine::parse_list(&args.engines)?;
    let spec = SweepSpec::new(kind, grid, engines)
        .with_trials(args.trials)
        .with_seed(args.seed)
        .with_rate_scaling(args.tdma_rate_scaling);
    let result = run_sweep(
        &config,
        &spec,
        &AnalyticOptions::default(),
        &McOptions::from_env(),
    )?;
    let csv = result.to_csv_string()?;
    write_outputs(
        args.out.as_deref(),
        csv.as_bytes(),
        command,
        &args.config,
        &config,
        &spec,
    )
}

#[derive(Serialize)]
struct DiversityRun<'a> {
    grid: &'a Grid,
    window: Window,
}

fn diversity(
    config_path: &Path,
    window: Window,
    grid: Option<Grid>,
    out: Option<&Path>,
) -> Result<()> {
    let grid = match grid {
        Some(g) => g,
        None => Grid::new(0.0, 60.0, 1.0)?,
    };
    let config = load_config(config_path, |f| f.or_rho_w_db(grid.values()[0]))?;
    let rows = diversity_report(&config, &grid, window, &AnalyticOptions::default())?;
    let mut body = Vec::new();
    write_diversity_csv(&rows, &mut body)?;
    if out.is_some() {
        for r in &rows {
            eprintln!(
                "user {}: slope {:.4} (asymptotic order {})",
                r.user, r.slope, r.asymptotic_order
            );
        }
    }
    write_outputs(
        out,
        &body,
        "diversity",
        config_path,
        &config,
        DiversityRun {
            grid: &grid,
            window,
        },
    )
}

#[derive(Serialize)]
struct SimulateRun {
    trials: u64,
    seed: u64,
    tdma_rate_scaling: Option<RateScaling>,
}

fn simulate(config_path: &Path, run: SimulateRun, out: Option<&Path>) -> Result<()> {
    let config = load_config(config_path, |f| f)?;
    let sc = config.validate()?;
    let mc = McOptions::from_env();
    let mut rows = Vec::new();
    let mut push = |engine, est: noma_core::OutageEstimate| {
        rows.extend(est.users.iter().map(|u| SweepRow {
            sweep_var: sc.rho_w_db(),
            user: u.user,
            engine,
            op: u.op_hat,
            ci_low: Some(u.ci_low),
            ci_high: Some(u.ci_high),
        }))
    };
    push(
        Engine::MonteCarlo,
        estimate_outage_with(&sc, run.trials, run.seed, &mc)?,
    );
    if let Some(scaling) = run.tdma_rate_scaling {
        push(
            Engine::TdmaMonteCarlo,
            estimate_tdma_outage_with(&sc, run.trials, run.seed, scaling, &mc)?,
        );
    }
    let csv = SweepResult { rows }.to_csv_string()?;
    write_outputs(out, csv.as_bytes(), "simulate", config_path, &config, run)
}

fn validate(config_path: &Path) -> Result<()> {
    let config = load_config(config_path, |f| f)?;
    let report = ValidationReport::new(&config.validate()?);
    print!("{report}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config } => validate(&config),
        Command::SweepSnr(args) => sweep(SweepKind::Snr, args),
        Command::SweepBackoff(args) => sweep(SweepKind::Backoff, args),
        Command::Diversity {
            config,
            window,
            grid,
            out,
        } => diversity(&config, window, grid, out.as_deref()),
        Command::Simulate {
            config,
            trials,
            seed,
            tdma_rate_scaling,
            out,
        } => simulate(
            &config,
            SimulateRun {
                trials,
                seed,
                tdma_rate_scaling,
            },
            out.as_deref(),
        ),
    }
}

fn report(err: &anyhow::Error) {
    if let Some(noma_core::Error::InvalidConfig(issues)) = err.downcast_ref::<noma_core::Error>() {
        eprintln!("error: invalid configuration");
        for issue in issues.iter() {
            eprintln!("  - {issue}");
        }
        return;
    }
    eprintln!("error: {err:#}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report(&err);
            ExitCode::FAILURE
        }
    }
}
