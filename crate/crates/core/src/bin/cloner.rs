use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cloner::experiments::{run_command, Command, ExperimentConfig, Preset, SEED_ENV};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cloner",
    version,
    about = "Asymmetric phase-covariant cloner simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML configuration file with [design], [noise], [run] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Asymmetry values; repeat the flag or pass a comma-separated list.
    #[arg(long = "q", global = true, value_delimiter = ',')]
    q: Vec<f64>,

    /// Phase grid step in degrees.
    #[arg(long, global = true)]
    phi_step: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Replaces the whole [noise] section.
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,

    /// Output CSV path, `-` for stdout.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Coupler reflectances and ideal fidelities per q.
    #[command(alias = "design_table")]
    DesignTable,
    /// Phase-covariant and universal trade-off curves plus simulated points.
    Tradeoff,
    /// Fidelities versus input phase.
    #[command(alias = "phase_scan")]
    PhaseScan,
    /// Simulated fidelities and success rate per q.
    #[command(alias = "monte_carlo")]
    MonteCarlo,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PresetArg {
    Paper,
    Ideal,
}

enum Failure {
    Config(String),
    Io(String),
    Other(String),
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.command = match cli.command {
        Cmd::DesignTable => Command::DesignTable,
        Cmd::Tradeoff => Command::Tradeoff,
        Cmd::PhaseScan => Command::PhaseScan,
        Cmd::MonteCarlo => Command::MonteCarlo,
    };
    if let Some(p) = cli.preset {
        cfg.noise = match p {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Ideal => Preset::Ideal,
        }
        .noise();
    }
    if !cli.q.is_empty() {
        cfg.design.q_values = cli.q.clone();
    }
    if let Some(step) = cli.phi_step {
        cfg.design.phi_step_deg = step;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = Some(seed);
    } else if cfg.run.seed.is_none() {
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v.trim().parse().map_err(|_| {
                Failure::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
            cfg.run.seed = Some(seed);
        }
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let table = run_command(&cfg).map_err(|e| Failure::Other(e.to_string()))?;
    table
        .write_to(&cfg.output.path)
        .map_err(|e| Failure::Io(format!("{}: {e}", cfg.output.path)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
