use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use taplab::{
    cmd_cluster, cmd_detect, cmd_generate, cmd_localize, cmd_report, load_config, parse_losses,
    parse_plan_groups, CliResult, ClusterArgs, Common, LabelScheme, DEFAULT_SAMPLES_PER_CASE,
};
use taplab_core::dataset::SEVERITY_LEVELS_DB;

/// Simulated optical-tap detection and localization from OPM readings.
#[derive(Debug, Parser)]
#[command(name = "taplab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Link configuration (TOML). Built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CASE as u64, value_parser = clap::value_parser!(u64).range(1..))]
    samples_per_case: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the labelled dataset for the default tap cases.
    Generate(CommonArgs),
    /// Tap-vs-normal clustering for each loss level.
    Detect {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated tap losses in dB.
        #[arg(long)]
        losses: Option<String>,
    },
    /// Feature-subset localization table.
    Localize {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated subset of rough,before,after.
        #[arg(long)]
        plans: Option<String>,
    },
    /// Cluster an existing dataset CSV on chosen features.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated feature names, e.g. osnr,ber,p_rx.
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        #[arg(long)]
        k: usize,
        /// Cluster on log10(BER) instead of linear BER.
        #[arg(long)]
        log_ber: bool,
        /// Score against: case (file labels), rough, or before.
        #[arg(long, default_value = "case")]
        labels: String,
    },
    /// Detection and localization in one run.
    Report(CommonArgs),
}

fn common(args: CommonArgs) -> CliResult<Common> {
    Ok(Common {
        config: load_config(args.config.as_deref())?,
        seed: args.seed,
        out_dir: args.out,
        samples_per_case: args.samples_per_case as usize,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(args) => {
            for path in cmd_generate(&common(args)?)? {
                println!("{}", path.display());
            }
        }
        Command::Detect {
            common: args,
            losses,
        } => {
            let losses = match losses {
                Some(text) => parse_losses(&text)?,
                None => SEVERITY_LEVELS_DB.to_vec(),
            };
            let (_, table) = cmd_detect(&common(args)?, &losses)?;
            print!("{table}");
        }
        Command::Localize {
            common: args,
            plans,
        } => {
            let groups = match plans {
                Some(text) => parse_plan_groups(&text)?,
                None => Vec::new(),
            };
            let (_, table) = cmd_localize(&common(args)?, &groups)?;
            print!("{table}");
        }
        Command::Cluster {
            common: common_args,
            dataset,
            features,
            k,
            log_ber,
            labels,
        } => {
            let args = ClusterArgs {
                dataset,
                features,
                k,
                log_ber,
                labels: LabelScheme::parse(&labels)?,
            };
            let (_, report) = cmd_cluster(&common(common_args)?, &args)?;
            print!("{report}");
        }
        Command::Report(args) => print!("{}", cmd_report(&common(args)?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("taplab: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
