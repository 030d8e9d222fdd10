use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use dcflex_core::harness::commands;
use dcflex_core::harness::{ExperimentConfig, GridSource, Matrix};
use dcflex_core::instance::CONFIG_FILE;
use dcflex_core::optimizer::{ShiftingMode, SignalModel, Strategy};
use dcflex_core::signal::synth::SignalKind;
use dcflex_core::Error;

/// Co-optimize data-center workloads with frequency-regulation capacity.
#[derive(Debug, Parser)]
#[command(name = "dcflex", version)]
struct Cli {
    /// Experiment configuration (JSON). Defaults to the bundle's config.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "dcflex-out")]
    out: PathBuf,
    /// `bundled` or `cmd:<command>` (gets the MPS and solution paths).
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelOverrides {
    /// decoupled | independent | cooperative
    #[arg(long)]
    strategy: Option<Strategy>,
    /// none | spatial | temporal | joint
    #[arg(long = "mode")]
    shifting_mode: Option<ShiftingMode>,
    /// direct_gaussian | envelope
    #[arg(long)]
    signal_model: Option<SignalModel>,
    /// Allowed probability of leaving the power band, in (0, 0.5].
    #[arg(long)]
    eps_p: Option<f64>,
    /// Tail probability of the queue VaR bounds, in (0, 0.5].
    #[arg(long)]
    eps_e: Option<f64>,
    /// Allowed rise in mean latency per slot (latency-table units).
    #[arg(long)]
    delta_qos: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance bundle into --out.
    GenInstance {
        /// The fixed six-bus demo grid with three data centers.
        #[arg(long)]
        demo: bool,
        #[arg(long)]
        dcs: Option<usize>,
        #[arg(long)]
        slots: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        buses: Option<usize>,
        #[arg(long)]
        generators: Option<usize>,
        #[arg(long)]
        signal: Option<SignalKind>,
    },
    /// Fit the direct Gaussian, the envelope and the VaR table.
    FitSignal {
        bundle: Option<PathBuf>,
        /// Fit this trace CSV instead of the bundle's signal.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve one configuration and validate the result.
    Solve {
        /// Instance bundle directory (default: the config's instance).
        bundle: Option<PathBuf>,
        #[command(flatten)]
        model: ModelOverrides,
        /// Also write the model as model.mps.
        #[arg(long)]
        export_mps: bool,
    },
    /// Replay held-out signal windows against a solution.
    Simulate {
        bundle: Option<PathBuf>,
        /// Solution to replay; solved from the config when omitted.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<usize>,
        #[command(flatten)]
        model: ModelOverrides,
    },
    /// Solve several configurations and tabulate them.
    Compare {
        bundle: Option<PathBuf>,
        /// strategies | modes | signals (default: the config's matrix).
        #[arg(long)]
        matrix: Option<Matrix>,
        #[command(flatten)]
        model: ModelOverrides,
    },
    /// Summarize the artifacts of a run directory as markdown.
    Report {
        /// Directory holding earlier outputs (default: --out).
        run_dir: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible(_)) => 2,
        Some(Error::Validation(_)) => 3,
        Some(Error::Solver(_) | Error::Build { .. }) => 1,
        _ => 4,
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, m: &ModelOverrides) {
    let model = &mut cfg.model;
    if let Some(v) = m.strategy {
        model.strategy = v;
    }
    if let Some(v) = m.shifting_mode {
        model.shifting_mode = v;
    }
    if let Some(v) = m.signal_model {
        model.signal_model = v;
    }
    if let Some(v) = m.eps_p {
        model.eps_p = v;
    }
    if let Some(v) = m.eps_e {
        model.eps_e = v;
    }
    if let Some(v) = m.delta_qos {
        model.delta_qos = v;
    }
}

/// Config precedence: --config, then the bundle's config.json, then defaults;
/// command-line flags override all of them.
fn load_config(cli: &Cli, bundle: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, bundle) {
        (Some(p), _) => ExperimentConfig::read(p)?,
        (None, Some(b)) if b.join(CONFIG_FILE).is_file() => ExperimentConfig::read(&b.join(CONFIG_FILE))?,
        _ => ExperimentConfig::default(),
    };
    if let Some(b) = bundle {
        cfg.instance = Some(b.to_path_buf());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = &cli.backend {
        cfg.backend = b.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::GenInstance { demo, dcs, slots, clusters, buses, generators, signal } => {
            let mut cfg = load_config(cli, None)?;
            let g = &mut cfg.generator;
            if *demo {
                g.grid = GridSource::Demo;
            }
            g.n_dc = dcs.unwrap_or(g.n_dc);
            g.n_slots = slots.unwrap_or(g.n_slots);
            g.n_clusters = clusters.unwrap_or(g.n_clusters);
            g.n_buses = buses.unwrap_or(g.n_buses);
            g.n_generators = generators.unwrap_or(g.n_generators);
            g.signal_kind = signal.unwrap_or(g.signal_kind);
            let m = commands::gen_instance(&cfg, &cli.out)?;
            say(format!("wrote {} artifacts to {}", m.artifacts.len(), cli.out.display()));
        }
        Command::FitSignal { bundle, trace } => {
            let cfg = load_config(cli, bundle.as_deref())?;
            let (_, r) = commands::fit_signal(&cfg, trace.as_deref(), &cli.out)?;
            say(format!(
                "direct sigma {:.4}, envelope sigma {:.4}, {} VaR horizons",
                r.direct.sigma,
                r.envelope.sigma,
                r.var_table.entries.len()
            ));
        }
        Command::Solve { bundle, model, export_mps } => {
            let mut cfg = load_config(cli, bundle.as_deref())?;
            apply_overrides(&mut cfg, model);
            cfg.export_mps |= *export_mps;
            let (_, s) = commands::solve(&cfg, &cli.out)?;
            let b = s.solution.breakdown;
            say(format!(
                "{} / {}: net cost {:.2} $ (generation {:.2}, penalty {:.2}, regulation revenue {:.2}); validation clean",
                s.cfg.strategy,
                s.cfg.shifting_mode,
                b.net(),
                b.generation_cost,
                b.penalty_cost,
                b.regulation_revenue
            ));
        }
        Command::Simulate { bundle, solution, scenarios, model } => {
            let mut cfg = load_config(cli, bundle.as_deref())?;
            apply_overrides(&mut cfg, model);
            if let Some(n) = scenarios {
                cfg.simulation.scenarios = *n;
            }
            let (_, s) = commands::simulate(&cfg, solution.as_deref(), &cli.out)?;
            say(format!(
                "{} scenarios: violation rate {:.4} (active {:.4}), queue inside {:.4}, revenue mean {:.2} $",
                s.scenarios, s.violation_rate, s.active_violation_rate, s.window_inside_share, s.revenue_mean
            ));
        }
        Command::Compare { bundle, matrix, model } => {
            let mut cfg = load_config(cli, bundle.as_deref())?;
            apply_overrides(&mut cfg, model);
            let cells = match matrix {
                Some(m) => m.cells(),
                None => cfg.matrix_cells(),
            };
            let (_, rows) = commands::compare(&cfg, &cells, &cli.out)?;
            for r in rows {
                say(format!("{:<28} net cost {:>10.3} k$  avg R {:>7.3} MW", r.label, r.net_cost / 1000.0, r.avg_regulation_mw));
            }
        }
        Command::Report { run_dir } => {
            let cfg = load_config(cli, None)?;
            let dir = run_dir.clone().unwrap_or_else(|| cli.out.clone());
            commands::report(&cfg, &dir, &cli.out).with_context(|| format!("reporting on {}", dir.display()))?;
            say(format!("wrote {}", cli.out.join("report.md").display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
