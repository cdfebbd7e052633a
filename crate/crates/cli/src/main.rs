//! `ceg`: build chain event graphs from event-tree models, run causal
//! queries, check back-door partitions and export Graphviz graphs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::DotTarget;
use config::{CliError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ceg", version, about = "Chain event graphs for reliability causal analysis")]
struct Cli {
    /// Write the shipped fixtures into the output directory.
    #[arg(long, global = true)]
    fixtures: bool,
    /// Output directory for DOT files and fixtures.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for redrawing fixture probabilities (stages and colours kept).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Absolute tolerance for probability checks.
    #[arg(long, global = true, allow_hyphen_values = true, env = "CEG_TOLERANCE", default_value_t = ceg_core::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, clap::Args)]
struct Inputs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    intervention: Option<PathBuf>,
    #[arg(long)]
    query: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize the staged tree and CEG of a model.
    Build {
        #[arg(long)]
        model: PathBuf,
    },
    /// Compute a causal effect and verify it three ways.
    Query(Inputs),
    /// Only the back-door verdict and criterion table.
    CheckBackdoor(Inputs),
    /// Print a Graphviz graph.
    ExportDot {
        #[arg(value_enum)]
        which: DotTarget,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        intervention: Option<PathBuf>,
    },
    /// Write the shipped models and documents.
    Fixtures,
}

fn config(cli: &Cli) -> RunConfig {
    let mut cfg = RunConfig {
        model_path: None,
        intervention_path: None,
        query_path: None,
        output_dir: cli.out.clone(),
        seed: cli.seed,
        tolerance: cli.tolerance,
    };
    match &cli.command {
        Some(Command::Build { model }) => cfg.model_path = Some(model.clone()),
        Some(Command::Query(i)) | Some(Command::CheckBackdoor(i)) => {
            cfg.model_path = Some(i.model.clone());
            cfg.intervention_path = i.intervention.clone();
            cfg.query_path = i.query.clone();
        }
        Some(Command::ExportDot { model, intervention, .. }) => {
            cfg.model_path = Some(model.clone());
            cfg.intervention_path = intervention.clone();
        }
        Some(Command::Fixtures) | None => {}
    }
    cfg
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(cli);
    cfg.validate()?;
    let out_dir = || cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    if cli.fixtures && !matches!(cli.command, Some(Command::Fixtures)) {
        print!("{}", commands::cmd_fixtures(&cfg, &out_dir())?);
    }
    match &cli.command {
        None if cli.fixtures => Ok(()),
        None => Err(CliError::Validation("no command given; see --help".into())),
        Some(Command::Fixtures) => {
            print!("{}", commands::cmd_fixtures(&cfg, &out_dir())?);
            Ok(())
        }
        Some(Command::Build { .. }) => {
            print!("{}", commands::cmd_build(&cfg)?);
            Ok(())
        }
        Some(Command::Query(_)) | Some(Command::CheckBackdoor(_)) => {
            let only = matches!(cli.command, Some(Command::CheckBackdoor(_)));
            let (report, failure) = commands::cmd_query(&cfg, only)?;
            print!("{report}");
            failure.map_or(Ok(()), Err)
        }
        Some(Command::ExportDot { which, .. }) => {
            let text = commands::cmd_export_dot(&cfg, *which)?;
            match &cfg.output_dir {
                Some(dir) => {
                    let path = dir.join(format!("{}.dot", format!("{which:?}").to_lowercase()));
                    config::write(&path, &text)?;
                    println!("dot: {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
