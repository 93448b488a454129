//! `stabilab`: run stability experiments from JSON configs or shipped presets.
//!
//! Exit codes: 0 when every verdict is as expected, 1 when at least one is
//! not, 2 for configuration errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use stabilab_core::experiment::{emit_report, preset, preset_names, run_experiment, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "stabilab", version, about = "Exact p-adic stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// List or run shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        name: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(clap::Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Text => Format::Text,
        }
    }
}

const CONFIG_ERROR: u8 = 2;

fn execute(config: &ExperimentConfig, output: &Output) -> anyhow::Result<ExitCode> {
    let report = match run_experiment(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("stabilab: {e}");
            return Ok(ExitCode::from(CONFIG_ERROR));
        }
    };
    let bytes = emit_report(&report, output.format.into());
    match &output.out {
        Some(path) => fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => fs::read_to_string(&config)
            .with_context(|| format!("reading {}", config.display()))
            .and_then(|text| match ExperimentConfig::from_json(&text) {
                Ok(c) => execute(&c, &output),
                Err(e) => {
                    eprintln!("stabilab: {e}");
                    Ok(ExitCode::from(CONFIG_ERROR))
                }
            }),
        Command::Presets { action: PresetAction::List } => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets {
            action: PresetAction::Run { name, output },
        } => match preset(&name) {
            Ok(c) => execute(&c, &output),
            Err(e) => {
                eprintln!("stabilab: {e}");
                Ok(ExitCode::from(CONFIG_ERROR))
            }
        },
    };
    result.unwrap_or_else(|e| {
        eprintln!("stabilab: {e:#}");
        ExitCode::from(CONFIG_ERROR)
    })
}
