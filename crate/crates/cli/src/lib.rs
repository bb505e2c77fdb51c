//! `biloc` subcommands. Each one reads files, runs one stage of the
//! pipeline and writes its artifacts; nothing is kept between calls.

use std::path::PathBuf;

use biloc_core::quantum::Convention;
use biloc_core::Error;
use clap::{Parser, Subcommand};

pub mod analytic;
pub mod analyze;
pub mod oracle;
pub mod report;
pub mod simulate;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ANALYSIS: u8 = 3;
pub const EXIT_OTHER: u8 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "biloc",
    version,
    about = "Bilocality network predictions and simulated experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Born-rule I1, I2, B and CHSH values for a configuration.
    Analytic {
        #[arg(long)]
        config: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Hidden-variable bounds and the (I1, I2) region grid.
    Oracle {
        /// Hidden-variable cardinality per source.
        #[arg(long, default_value_t = 4)]
        card: usize,
        /// Grid points per axis of the region CSV.
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Simulate a run and write streams, references and a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides run.duration_s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Synchronize, match coincidences and estimate B and CHSH.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to config.toml inside the input directory.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Four-fold windows in ns, comma separated.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<f64>>,
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        convention: Option<Convention>,
        /// Analyze even when the offset search finds no clear peak.
        #[arg(long)]
        force: bool,
        /// Defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot-ready CSVs from an analyzed directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analytic { config, json } => analytic::cmd_analytic(&config, json),
        Command::Oracle {
            card,
            resolution,
            out,
        } => oracle::cmd_oracle(card, resolution, &out),
        Command::Simulate {
            config,
            out,
            seed,
            duration,
        } => simulate::cmd_simulate(&config, &out, seed, duration),
        Command::Analyze {
            input,
            config,
            windows,
            blocks,
            convention,
            force,
            out,
        } => analyze::cmd_analyze(&analyze::AnalyzeArgs {
            input,
            config,
            windows_ns: windows,
            blocks,
            convention,
            force,
            out,
        }),
        Command::Report { input, resolution } => report::cmd_report(&input, resolution),
    }
}

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(
            Error::Config { .. }
            | Error::InvalidState(_)
            | Error::InvalidObservable(_)
            | Error::InvalidModel(_)
            | Error::CardinalityMismatch(_)
            | Error::EmptySchedule
            | Error::OutOfRange(_),
        ) => EXIT_CONFIG,
        Some(
            Error::Sync(_)
            | Error::NoEvents
            | Error::IncompleteSettings(_)
            | Error::InsufficientBlocks(_)
            | Error::InvalidDistribution(_)
            | Error::TimestampRange(_),
        ) => EXIT_ANALYSIS,
        _ => EXIT_OTHER,
    }
}

pub(crate) fn write_csv<S: serde::Serialize>(
    path: &std::path::Path,
    rows: &[S],
) -> anyhow::Result<()> {
    use anyhow::Context;
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<S: serde::Serialize>(
    path: &std::path::Path,
    value: &S,
) -> anyhow::Result<()> {
    use anyhow::Context;
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
