use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ntdpc_lab::commands::{cmd_monte_carlo, cmd_sensitivity, cmd_simulate, cmd_timing, output_dir, parse_controllers, Artifacts};
use ntdpc_lab::{Config, Result};

#[derive(Parser)]
#[command(name = "ntdpc", version, about = "Data-driven predictive control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect data, build the predictor and run the closed loop.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// ntdpc, spc, smmpc or all; defaults to the config's list.
        #[arg(long)]
        controller: Option<String>,
        /// Also write the QP solved at this time step.
        #[arg(long, value_name = "K")]
        dump_qp: Option<usize>,
    },
    /// Closed loops over derived seeds, aggregated per step.
    MonteCarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        controller: Option<String>,
    },
    /// Past-data sensitivity over the T_ini and noise variance grid.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Wall time and cost model of the offline predictor builds.
    Timing {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        th: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
    },
}

fn load(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

/// Command-line overrides are folded into the config so the resolved echo
/// reproduces the run.
fn run(cli: Cli) -> Result<Artifacts> {
    match cli.command {
        Command::Simulate { config, controller, dump_qp } => {
            let cfg = load(Some(&config))?;
            let kinds = parse_controllers(controller.as_deref(), &cfg)?;
            cmd_simulate(&cfg, &kinds, dump_qp, &output_dir(&cfg))
        }
        Command::MonteCarlo { config, runs, controller } => {
            let mut cfg = load(Some(&config))?;
            if let Some(r) = runs {
                cfg.monte_carlo.runs = r;
            }
            if let Some(c) = &controller {
                cfg.control.controllers = parse_controllers(Some(c), &cfg)?.iter().map(|k| k.name().to_string()).collect();
            }
            cfg.validate()?;
            let kinds = cfg.controllers()?;
            cmd_monte_carlo(&cfg, &kinds, &output_dir(&cfg))
        }
        Command::Sensitivity { config, seeds } => {
            let mut cfg = load(Some(&config))?;
            if let Some(s) = seeds {
                cfg.sensitivity.seeds = s;
            }
            cfg.validate()?;
            cmd_sensitivity(&cfg, &output_dir(&cfg))
        }
        Command::Timing { config, th, m, repeats } => {
            let mut cfg = load(config.as_ref())?;
            if let Some(v) = th {
                cfg.timing.t_h = v;
            }
            if let Some(v) = m {
                cfg.timing.columns = v;
            }
            if let Some(r) = repeats {
                cfg.timing.repeats = r;
            }
            cfg.validate()?;
            cmd_timing(&cfg, &output_dir(&cfg)).map(|(a, _)| a)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(art) => {
            for p in &art.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
