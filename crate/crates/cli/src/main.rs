//! `polarq`: construct q-ary polar codes, compress with them, and run the
//! verification experiments. Tables are written as CSV.

mod commands;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use polarq::FrozenPolicy;

use commands::{ChannelSource, StatsConfig, StatsMethod};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "polarq",
    version,
    about = "q-ary polar source coding and polarization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel model file.
    #[arg(long, conflicts_with = "q")]
    channel: Option<PathBuf>,
    /// Alphabet size of the default q-ary symmetric channel.
    #[arg(long)]
    q: Option<usize>,
    /// Conditional entropy the default channel is tuned to.
    #[arg(long, default_value_t = 0.5)]
    entropy: f64,
}

impl ChannelArgs {
    fn source(&self) -> ChannelSource {
        ChannelSource {
            channel: self.channel.clone(),
            q: self.q,
            entropy: self.entropy,
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    /// Block length is 2^n.
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum, default_value_t = StatsMethod::Auto)]
    method: StatsMethod,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Pre-merge atom cap per level for exact tracking.
    #[arg(long, default_value_t = 1 << 26)]
    atom_budget: u64,
}

impl StatsArgs {
    fn config(&self) -> StatsConfig {
        StatsConfig {
            n: self.n,
            method: self.method,
            samples: self.samples,
            seed: self.seed,
            atom_budget: self.atom_budget,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a code spec from a channel model.
    #[command(group(ArgGroup::new("policy").required(true).args(["rate", "threshold"])))]
    Construct {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        stats: StatsArgs,
        /// Fraction of indices to freeze (transmit).
        #[arg(long)]
        rate: Option<f64>,
        /// Freeze every index whose entropy exceeds this.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compress a symbol file (one symbol per line) into a stream.
    Compress {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompress a stream given side information (one output index per line).
    Decompress {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        side: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical block failure rate of a spec on fresh samples.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-index polarization statistics.
    Profile {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        stats: StatsArgs,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Exact per-depth summaries for depths 0..=n instead of per-index rows.
        #[arg(long)]
        levels: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the entropy inequality catalog on random operands.
    VerifyInequalities {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 5, 7])]
        q: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for the smallest conditional entropy gain relative to T(W).
    EstimateAlpha {
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Local perturbation steps around the best channel found.
        #[arg(long, default_value_t = 200)]
        refine: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest one-step contraction of sqrt T over random channels.
    Contraction {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 5])]
        q: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Channels with T(W) at or below this are skipped.
        #[arg(long, default_value_t = 1e-9)]
        min_t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Construct {
            channel,
            stats,
            rate,
            threshold,
            out,
        } => {
            let policy = match (rate, threshold) {
                (Some(r), _) => FrozenPolicy::Rate(r),
                (None, Some(t)) => FrozenPolicy::Threshold(t),
                (None, None) => unreachable!("clap requires one policy"),
            };
            commands::construct(&channel.source(), &stats.config(), policy, out.as_deref())
        }
        Command::Compress { spec, input, out } => {
            commands::compress_file(&spec, &input, out.as_deref())
        }
        Command::Decompress {
            spec,
            input,
            side,
            out,
        } => commands::decompress_file(&spec, &input, side.as_deref(), out.as_deref()),
        Command::Simulate {
            spec,
            trials,
            seed,
            out,
        } => commands::simulate(&spec, trials, seed, out.as_deref()),
        Command::Profile {
            channel,
            stats,
            epsilon,
            levels,
            out,
        } => commands::profile(
            &channel.source(),
            &stats.config(),
            epsilon,
            levels,
            out.as_deref(),
        ),
        Command::VerifyInequalities {
            q,
            trials,
            seed,
            out,
        } => commands::verify_inequalities(&q, trials, seed, out.as_deref()),
        Command::EstimateAlpha {
            q,
            trials,
            refine,
            seed,
            out,
        } => commands::estimate_alpha_cmd(q, trials, refine, seed, out.as_deref()),
        Command::Contraction {
            q,
            trials,
            seed,
            min_t,
            out,
        } => commands::contraction(&q, trials, seed, min_t, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let text = text.trim().trim_start_matches("error:");
            let err = CliError::parse(text.split_whitespace().collect::<Vec<_>>().join(" "));
            eprintln!("{}", err.report_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
