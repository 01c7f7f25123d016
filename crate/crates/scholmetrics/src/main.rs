//! Command-line front end over the batch pipeline.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 missing
//! upstream artifact, 3 data error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use scholmetrics::pipeline::{self, Command, ConfigOverrides, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(
    name = "scholmetrics",
    version,
    about = "Venue-centered scientometrics over flat-file bibliographic dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Parse the dump and institution table into the staged store.
    Ingest(CommonArgs),
    /// Slice the store into per-venue accepted/citing/cited partitions.
    Extract(CommonArgs),
    /// Annotate each venue's accepted papers with ontology topics.
    Classify(CommonArgs),
    /// Emit the CSV reports and SVG heatmaps for each venue.
    Report(CommonArgs),
    /// Run ingest, extract, classify, and report in order.
    All(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (flat `key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Restrict venue-level stages to one configured logical venue.
    #[arg(long, value_name = "NAME")]
    venue: Option<String>,

    /// Override the label-similarity threshold from the config file.
    #[arg(long, value_name = "R")]
    threshold: Option<f64>,

    /// Override the trend window start year.
    #[arg(long, value_name = "YEAR")]
    start_year: Option<i32>,

    /// Override the trend window end year.
    #[arg(long, value_name = "YEAR")]
    end_year: Option<i32>,

    /// Abort on the first malformed input row instead of skipping it.
    #[arg(long)]
    strict: bool,

    /// Override the output directory from the config file.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::init();

    // Usage problems exit 1; --help and --version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let (command, args) = match cli.command {
        CliCommand::Ingest(args) => (Command::Ingest, args),
        CliCommand::Extract(args) => (Command::Extract, args),
        CliCommand::Classify(args) => (Command::Classify, args),
        CliCommand::Report(args) => (Command::Report, args),
        CliCommand::All(args) => (Command::All, args),
    };
    let overrides = ConfigOverrides {
        venue: args.venue,
        threshold: args.threshold,
        start_year: args.start_year,
        end_year: args.end_year,
        strict: args.strict,
        out: args.out,
    };

    let config = match PipelineConfig::load(&args.config, &overrides) {
        Ok(config) => config,
        Err(e) => fail(e),
    };
    match pipeline::run(command, &config) {
        Ok(summary) => {
            for line in summary.lines {
                println!("{line}");
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: PipelineError) -> ! {
    eprintln!("error: {e}");
    std::process::exit(e.exit_code());
}
