use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stereoqual_cli::commands;
use stereoqual_cli::{CliResult, RunConfig};
use stereoqual_session::ExportFilter;

/// Stereo coding-artifact listening tests: stimuli, trial plans, sessions
/// and statistics.
#[derive(Debug, Parser)]
#[command(name = "stereoqual", version)]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `generation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `paths.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic stand-in items into `paths.items`.
    Synth {
        #[arg(long)]
        seconds: Option<f64>,
    },
    /// Render all conditions and anchors; write the manifest.
    Generate,
    /// Build the trial plan from the manifest.
    Plan,
    /// Run the session service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
    },
    /// Write the score table of the session log.
    Export {
        #[arg(long)]
        to: Option<PathBuf>,
        #[arg(long)]
        include_incomplete: bool,
    },
    /// Summaries, LR/MS significance and figure tables for a score table.
    Analyze {
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Print the resolved configuration.
    Config,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.generation.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.paths.out = out;
    }
    match cli.command {
        Command::Synth { seconds } => {
            if let Some(s) = seconds {
                cfg.synth.seconds = s;
            }
            let written = commands::cmd_synth(&cfg)?;
            println!(
                "wrote {} items to {}",
                written.len(),
                cfg.paths.items.display()
            );
        }
        Command::Generate => {
            let report = commands::cmd_generate(&cfg)?;
            let clipped: usize = report.manifest.rows.iter().map(|r| r.clipped).sum();
            println!(
                "{} stimuli rendered ({} changed, {clipped} clipped samples); manifest {}",
                report.manifest.len(),
                report.changed,
                cfg.manifest_path().display()
            );
        }
        Command::Plan => {
            let file = commands::cmd_plan(&cfg)?;
            println!(
                "{} trials + {} training; plan {}",
                file.plan.trials.len(),
                file.plan.training.len(),
                cfg.plan_path().display()
            );
            for note in &file.plan.notes {
                println!("note: {note}");
            }
        }
        Command::Serve { addr } => {
            if let Some(a) = addr {
                cfg.serve.addr = a;
            }
            commands::cmd_serve(&cfg)?;
        }
        Command::Export {
            to,
            include_incomplete,
        } => {
            let path =
                commands::cmd_export(&cfg, to.as_deref(), ExportFilter { include_incomplete })?;
            println!("scores written to {}", path.display());
        }
        Command::Analyze { scores } => {
            let analysis = commands::cmd_analyze(&cfg, scores.as_deref())?;
            print!("{}", commands::format_pooled(&analysis));
            println!(
                "{} tables in {}",
                analysis.files.len(),
                cfg.analysis_dir().display()
            );
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
