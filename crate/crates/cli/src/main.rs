use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use lapwise::pdp::AccountingMode;
use lapwise_cli::commands::{
    self, BrdOptions, GaOptions, IngestOptions, Method, RunStatus, SolveOptions,
};

/// Per-instance Laplace noise-scale optimization for sampling queries.
#[derive(Parser)]
#[command(name = "lapwise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and bin a CSV column into a histogram JSON document.
    Preprocess {
        #[command(flatten)]
        ingest: IngestArgs,
        /// Output path for the histogram JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline: preprocess, optimize scales, evaluate, export.
    Solve {
        #[command(flatten)]
        ingest: IngestArgs,
        /// Scale multipliers forming the action set, as multiples of
        /// sensitivity/epsilon.
        #[arg(long, value_delimiter = ',', default_values_t = [3.0, 2.0, 1.0, 0.33, 0.2])]
        multipliers: Vec<f64>,
        /// Which solver assigns the per-instance scales.
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Accounting mode for the satisfied flags.
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Seed for all randomness in the run.
        #[arg(long)]
        seed: u64,
        /// Best-response pass cap.
        #[arg(long, default_value_t = 100)]
        max_passes: usize,
        /// Minimum payoff improvement for adopting a move.
        #[arg(long, default_value_t = 0.0)]
        payoff_tolerance: f64,
        /// Start from seeded random scales instead of the largest scale.
        #[arg(long)]
        random_init: bool,
        /// Flag satisfied instances one by one instead of per
        /// (bin, scale) group; result-identical, only slower.
        #[arg(long)]
        ungrouped: bool,
        /// Generation count (required with --method ga).
        #[arg(long)]
        ga_generations: Option<usize>,
        #[arg(long, default_value_t = 500)]
        ga_population: usize,
        #[arg(long, default_value_t = 10)]
        ga_mating_parents: usize,
        #[arg(long, default_value_t = 2)]
        ga_crossover_points: usize,
        #[arg(long, default_value_t = 0.05)]
        ga_mutation_rate: f64,
        #[arg(long, default_value_t = 5)]
        ga_elites: usize,
        /// Stop when the best fitness has stalled this many generations.
        #[arg(long, default_value_t = 50)]
        ga_stall: usize,
        /// Directory receiving histogram.json, plan.json, report.json and
        /// trace.csv.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write distributions.csv (original vs mechanism masses).
        #[arg(long)]
        export_dist: bool,
        /// Also write samples.csv with this many privatized draws.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Evaluate the identical-scale reference mechanism.
    Baseline {
        #[command(flatten)]
        ingest: IngestArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Seed for the optional sample export.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        export_dist: bool,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Re-evaluate a stored plan against a stored histogram.
    Evaluate {
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw privatized samples from a stored histogram and plan.
    Sample {
        #[arg(long)]
        histogram: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export per-bin masses of the original and one or more plans.
    ExportDist {
        #[arg(long)]
        histogram: PathBuf,
        /// Plan JSON path; repeat for extra mass columns. With no plans
        /// only the original masses are exported.
        #[arg(long)]
        plan: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IngestArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the numeric column to privatize.
    #[arg(long)]
    column: String,
    /// Privacy target per instance.
    #[arg(long)]
    epsilon: f64,
    /// Laplace percentile covered by the normalization margin.
    #[arg(long, default_value_t = 0.9)]
    percentile: f64,
    /// Sensitivity of the sampling query on the normalized domain.
    #[arg(long, default_value_t = 1.0)]
    sensitivity: f64,
    /// Number of histogram bins.
    #[arg(long, default_value_t = 101)]
    k: usize,
}

impl IngestArgs {
    fn into_options(self) -> IngestOptions {
        IngestOptions {
            input: self.input,
            column: self.column,
            epsilon: self.epsilon,
            percentile: self.percentile,
            sensitivity: self.sensitivity,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Brd,
    Ga,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Conservative,
}

impl From<ModeArg> for AccountingMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Exact => AccountingMode::Exact,
            ModeArg::Conservative => AccountingMode::Conservative,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(RunStatus::Satisfied) => ExitCode::SUCCESS,
        Ok(RunStatus::PrivacyShortfall) => {
            eprintln!("privacy target not met for every instance; artifacts written");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<RunStatus> {
    match cli.command {
        Command::Preprocess { ingest, out } => {
            commands::preprocess(&ingest.into_options(), &out)?;
            Ok(RunStatus::Satisfied)
        }
        Command::Solve {
            ingest,
            multipliers,
            method,
            mode,
            seed,
            max_passes,
            payoff_tolerance,
            random_init,
            ungrouped,
            ga_generations,
            ga_population,
            ga_mating_parents,
            ga_crossover_points,
            ga_mutation_rate,
            ga_elites,
            ga_stall,
            out_dir,
            export_dist,
            samples,
        } => commands::solve(&SolveOptions {
            ingest: ingest.into_options(),
            multipliers,
            method: match method {
                MethodArg::Brd => Method::Brd,
                MethodArg::Ga => Method::Ga,
            },
            mode: mode.into(),
            seed,
            brd: BrdOptions {
                max_passes,
                payoff_tolerance,
                random_init,
                ungrouped,
            },
            ga: GaOptions {
                generations: ga_generations,
                population: ga_population,
                mating_parents: ga_mating_parents,
                crossover_points: ga_crossover_points,
                mutation_rate: ga_mutation_rate,
                elites: ga_elites,
                stall_generations: ga_stall,
            },
            out_dir,
            export_dist,
            samples,
        }),
        Command::Baseline {
            ingest,
            mode,
            seed,
            out_dir,
            export_dist,
            samples,
        } => commands::baseline(
            &ingest.into_options(),
            mode.into(),
            seed,
            &out_dir,
            export_dist,
            samples,
        ),
        Command::Evaluate {
            histogram,
            plan,
            mode,
            out,
        } => commands::evaluate(&histogram, &plan, mode.into(), &out),
        Command::Sample {
            histogram,
            plan,
            count,
            seed,
            out,
        } => {
            commands::sample(&histogram, &plan, count, seed, &out)?;
            Ok(RunStatus::Satisfied)
        }
        Command::ExportDist {
            histogram,
            plan,
            out,
        } => {
            commands::export_dist(&histogram, &plan, &out)?;
            Ok(RunStatus::Satisfied)
        }
    }
}
