//! `erforge` command-line entry point.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use erforge::config::AppConfig;

/// Extract, lint, compare and render entity-relationship models, and run
/// prompting experiments against LLM providers.
#[derive(Debug, Parser)]
#[command(name = "erforge", version)]
pub struct Cli {
    /// Settings file with [lint], [diff] and [render] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Suppress informational output; results and errors still print.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover a model document from raw LLM output and write it in canonical form.
    Extract {
        /// Raw response file, or a directory of them for batch mode.
        input: PathBuf,
        /// Output file (or directory in batch mode). Defaults to stdout for a single file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Report design findings and the quality level of a model document.
    Lint { model: PathBuf },
    /// Compare a generated model against a gold-standard model.
    Diff { generated: PathBuf, gold: PathBuf },
    /// Emit Graphviz DOT, or rasterize it through an external renderer.
    Render {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
    },
    /// Run an experiment config over every scenario, strategy and provider.
    Run {
        experiment: PathBuf,
        /// Also lint, diff and render every record.
        #[arg(long)]
        analyze: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Png,
    Svg,
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Findings = 1,
    BadInput = 2,
    Provider = 3,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match AppConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(Status::BadInput as u8);
            }
        },
        None => AppConfig::default(),
    };
    let status = commands::dispatch(&cli, &config);
    ExitCode::from(status as u8)
}
