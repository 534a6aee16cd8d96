use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tlex_cli::generate::{cmd_gen, GenConfig, GenFormat};
use tlex_cli::{cmd_check, cmd_extract, cmd_stats, Format, Indeterminacy, RunConfig};

/// Temporal consistency checking and trunk-and-branch timeline extraction
/// for TimeML documents.
#[derive(Parser)]
#[command(name = "tlex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report whether each document is consistent, listing inconsistent cycles.
    Check(RunArgs),
    /// Extract trunk-and-branch timelines.
    Extract(RunArgs),
    /// Corpus statistics: inconsistency counts and timeline sizes.
    Stats(RunArgs),
    /// Generate random synthetic documents.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// .tml/.xml TimeML files, .json graph dumps, or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Keep links from an entity to itself instead of dropping them.
    #[arg(long)]
    keep_self_loops: bool,
    /// Ignore ALINKs.
    #[arg(long)]
    tlinks_only: bool,
    #[arg(long, value_enum, default_value_t = Indeterminacy::Sections)]
    indeterminacy: Indeterminacy,
    /// File of node ids known to lie on main timelines, one per line.
    #[arg(long, value_name = "FILE")]
    anchors: Option<PathBuf>,
    /// Write one output file per document into this directory (extract only).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (falls back to TLEX_JOBS).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            inputs: a.inputs,
            format: a.format,
            drop_self_loops: !a.keep_self_loops,
            include_alinks: !a.tlinks_only,
            indeterminacy: a.indeterminacy,
            anchors_file: a.anchors,
            out_dir: a.out,
            jobs: a.jobs,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Events and times per document.
    #[arg(long, default_value_t = 40)]
    intervals: usize,
    /// Probability that a pair of entities gets a temporal link.
    #[arg(long, default_value_t = 0.06)]
    density: f64,
    /// Probability that an event subordinates another one.
    #[arg(long, default_value_t = 0.05)]
    slink_prob: f64,
    /// Add a contradictory pair of links to every document.
    #[arg(long)]
    inject_cycle: bool,
    #[arg(long = "as", value_enum, default_value_t = GenFormat::Tml)]
    format: GenFormat,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a.into(), &mut stdout),
        Command::Extract(a) => cmd_extract(&a.into(), &mut stdout),
        Command::Stats(a) => cmd_stats(&a.into(), &mut stdout),
        Command::Gen(a) => {
            let cfg = GenConfig {
                count: a.count,
                intervals: a.intervals,
                density: a.density,
                slink_prob: a.slink_prob,
                inject_cycle: a.inject_cycle,
                seed: a.seed,
                format: a.format,
                out_dir: a.out,
            };
            cmd_gen(&cfg, &mut stdout)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("tlex: {e:#}");
            ExitCode::from(2)
        }
    }
}
