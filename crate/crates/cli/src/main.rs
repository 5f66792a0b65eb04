use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use etclab_cli::commands::{self, Overrides};
use etclab_cli::output::OutDir;
use etclab_cli::{parse_config_file, CliError, RunSpec};
use etclab_core::TriggerFamily;

#[derive(Parser)]
#[command(
    name = "etclab",
    version,
    about = "Event-triggered control experiments"
)]
struct Cli {
    /// JSON run configuration (`-` for stdin); the reference setup when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed of the Monte Carlo streams
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files
    #[arg(long, global = true, env = "ETCLAB_OUT_DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads for Monte Carlo work; results do not depend on it
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Directional,
    Isotropic,
    TimeVarying,
}

impl From<Family> for TriggerFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Directional => TriggerFamily::Directional,
            Family::Isotropic => TriggerFamily::Isotropic,
            Family::TimeVarying => TriggerFamily::TimeVarying,
        }
    }
}

#[derive(clap::Args, Default)]
struct PolicyArgs {
    /// Trigger family, replacing the configured one
    #[arg(long, value_enum)]
    policy: Option<Family>,
    /// Threshold of the directional or isotropic trigger
    #[arg(long)]
    sigma: Option<f64>,
    /// Envelope decay rate of the time-varying trigger
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single closed-loop run: trajectory.csv and summary.json
    Simulate(PolicyArgs),
    /// Seeded batch of runs: runs.csv and aggregate.csv
    Montecarlo {
        #[command(flatten)]
        policy: PolicyArgs,
        /// Run the three tuned triggers and add pareto.csv and reduction.json
        #[arg(long)]
        compare: bool,
    },
    /// Grid search over one trigger parameter: sweep.csv and best.json
    Sweep {
        /// Family to tune, replacing the configured one
        #[arg(long, value_enum)]
        policy: Option<Family>,
    },
    /// Minimum inter-event time bound: miet.json
    Miet {
        /// Directional threshold; the configured one when omitted
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Stability bound and decay-rate curve: stability.json and decay_curve.csv
    Stability,
    /// Safety gate against a black-box policy: gated_trajectory.csv, gate_log.csv, gate_summary.json
    GateDemo {
        /// Gate threshold, replacing the configured one
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Energy per mission and battery life: energy.json
    Energy {
        /// Transmissions per mission
        #[arg(long)]
        events: Option<f64>,
    },
}

fn load(cli: &Cli) -> Result<RunSpec, CliError> {
    match &cli.config {
        Some(path) => parse_config_file(path),
        None => Ok(RunSpec::default()),
    }
}

fn workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let mut spec = load(&cli)?;
    let mut overrides = Overrides {
        seed: cli.seed,
        ..Overrides::default()
    };
    let fill = |o: &mut Overrides, p: &PolicyArgs| {
        o.policy = p.policy.map(Into::into);
        o.sigma = p.sigma;
        o.alpha = p.alpha;
    };
    match &cli.command {
        Command::Simulate(p) | Command::Montecarlo { policy: p, .. } => fill(&mut overrides, p),
        Command::Sweep { policy } => overrides.policy = policy.map(Into::into),
        _ => {}
    }
    overrides.apply(&mut spec)?;
    if let Some(0) = cli.workers {
        return Err(CliError::Argument("--workers must be at least 1".into()));
    }
    let workers = workers(cli.workers);
    let out = OutDir::new(&cli.out)?;

    match cli.command {
        Command::Simulate(_) => commands::run_simulate(&spec, &out),
        Command::Montecarlo { compare, .. } => {
            commands::run_montecarlo(&spec, &out, workers, compare)
        }
        Command::Sweep { .. } => commands::run_sweep(&spec, &out, workers),
        Command::Miet { sigma } => {
            let sigma = commands::miet_sigma(&spec, sigma);
            commands::run_miet(&spec, &out, sigma)
        }
        Command::Stability => commands::run_stability(&spec, &out),
        Command::GateDemo { sigma } => commands::run_gate_demo(&spec, &out, sigma),
        Command::Energy { events } => commands::run_energy(&spec, &out, events),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Argument(e.render().to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
