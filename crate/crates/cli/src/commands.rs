//! Subcommand implementations. Each returns whether the produced plan
//! satisfies the privacy target for every instance, which the binary maps
//! onto its exit code.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use lapwise::game::{brd_solve, BrdConfig, InitStrategy, SolveOutcome};
use lapwise::mechanism::{baseline_plan, sample_output, ActionSet};
use lapwise::pdp::{build_report, AccountingMode, PrivacyReport};
use lapwise::preprocess::{compute_normalization, normalize_and_bin, read_numeric_column};
use lapwise::{ga_solve, BinnedDataset, GaConfig, VariancePlan};

use crate::files::{
    write_distributions_csv, write_json, write_samples_csv, HistogramFile, PlanFile, ReportFile,
};

/// Outcome of a command that evaluates a plan against its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Satisfied,
    /// The plan leaves at least one instance above the privacy target;
    /// artifacts are still written.
    PrivacyShortfall,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub input: PathBuf,
    pub column: String,
    pub epsilon: f64,
    pub percentile: f64,
    pub sensitivity: f64,
    pub k: usize,
}

pub fn ingest(opts: &IngestOptions) -> Result<BinnedDataset> {
    let data = read_numeric_column(&opts.input, &opts.column)
        .with_context(|| format!("reading {}", opts.input.display()))?;
    let params = compute_normalization(&data, opts.epsilon, opts.percentile, opts.sensitivity)?;
    Ok(normalize_and_bin(&data, &params, opts.k)?)
}

pub fn preprocess(opts: &IngestOptions, out: &Path) -> Result<()> {
    let binned = ingest(opts)?;
    write_json(out, &HistogramFile::from_binned(&binned))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Brd,
    Ga,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub ingest: IngestOptions,
    pub multipliers: Vec<f64>,
    pub method: Method,
    pub mode: AccountingMode,
    pub seed: u64,
    pub brd: BrdOptions,
    pub ga: GaOptions,
    pub out_dir: PathBuf,
    pub export_dist: bool,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct BrdOptions {
    pub max_passes: usize,
    pub payoff_tolerance: f64,
    pub random_init: bool,
    pub ungrouped: bool,
}

#[derive(Debug, Clone)]
pub struct GaOptions {
    pub generations: Option<usize>,
    pub population: usize,
    pub mating_parents: usize,
    pub crossover_points: usize,
    pub mutation_rate: f64,
    pub elites: usize,
    pub stall_generations: usize,
}

/// Full pipeline: ingest, solve, evaluate, write artifacts.
pub fn solve(opts: &SolveOptions) -> Result<RunStatus> {
    let binned = ingest(&opts.ingest)?;
    let action = ActionSet::new(
        opts.multipliers.clone(),
        opts.ingest.epsilon,
        opts.ingest.sensitivity,
    )?;

    let outcome: SolveOutcome = match opts.method {
        Method::Brd => {
            let cfg = BrdConfig {
                max_passes: opts.brd.max_passes,
                payoff_tolerance: opts.brd.payoff_tolerance,
                init: if opts.brd.random_init {
                    InitStrategy::Random
                } else {
                    InitStrategy::MaxScale
                },
                seed: opts.seed,
                mode: opts.mode,
                group_identical: !opts.brd.ungrouped,
            };
            brd_solve(&binned, &action, &cfg)?
        }
        Method::Ga => {
            let generations = opts
                .ga
                .generations
                .context("--ga-generations is required for the ga method")?;
            let cfg = GaConfig::new(generations, opts.seed)
                .with_population(opts.ga.population)
                .with_mating_parents(opts.ga.mating_parents)
                .with_crossover_points(opts.ga.crossover_points)
                .with_mutation_rate(opts.ga.mutation_rate)
                .with_elites(opts.ga.elites)
                .with_stall_generations(opts.ga.stall_generations)
                .with_mode(opts.mode);
            ga_solve(&binned, &action, &cfg)?
        }
    };

    let report = build_report(&binned, &outcome.plan, opts.mode)?;

    fs::create_dir_all(&opts.out_dir)
        .with_context(|| format!("creating {}", opts.out_dir.display()))?;
    write_json(
        &opts.out_dir.join("histogram.json"),
        &HistogramFile::from_binned(&binned),
    )?;
    write_json(
        &opts.out_dir.join("plan.json"),
        &PlanFile::from_plan(&outcome.plan),
    )?;
    write_json(
        &opts.out_dir.join("report.json"),
        &ReportFile::from_report(&report),
    )?;
    let trace_path = opts.out_dir.join("trace.csv");
    let mut trace = Vec::new();
    outcome.trace.write_csv(&mut trace)?;
    fs::write(&trace_path, trace).with_context(|| format!("writing {}", trace_path.display()))?;

    finish_run(opts_common(opts), &binned, &outcome.plan, &report)
}

/// The identical-scale reference mechanism, evaluated like `solve`.
pub fn baseline(
    ingest_opts: &IngestOptions,
    mode: AccountingMode,
    seed: u64,
    out_dir: &Path,
    export_dist: bool,
    samples: Option<usize>,
) -> Result<RunStatus> {
    let binned = ingest(ingest_opts)?;
    let plan = baseline_plan(&binned, ingest_opts.epsilon, ingest_opts.sensitivity)?;
    let report = build_report(&binned, &plan, mode)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_json(
        &out_dir.join("histogram.json"),
        &HistogramFile::from_binned(&binned),
    )?;
    write_json(&out_dir.join("plan.json"), &PlanFile::from_plan(&plan))?;
    write_json(
        &out_dir.join("report.json"),
        &ReportFile::from_report(&report),
    )?;

    finish_run(
        CommonOutputs {
            out_dir,
            export_dist,
            samples,
            seed,
        },
        &binned,
        &plan,
        &report,
    )
}

struct CommonOutputs<'a> {
    out_dir: &'a Path,
    export_dist: bool,
    samples: Option<usize>,
    seed: u64,
}

fn opts_common(opts: &SolveOptions) -> CommonOutputs<'_> {
    CommonOutputs {
        out_dir: &opts.out_dir,
        export_dist: opts.export_dist,
        samples: opts.samples,
        seed: opts.seed,
    }
}

fn finish_run(
    outputs: CommonOutputs<'_>,
    binned: &BinnedDataset,
    plan: &VariancePlan,
    report: &PrivacyReport,
) -> Result<RunStatus> {
    if outputs.export_dist {
        write_distributions_csv(
            &outputs.out_dir.join("distributions.csv"),
            binned,
            std::slice::from_ref(plan),
        )?;
    }
    if let Some(count) = outputs.samples {
        let samples = sample_output(binned, plan, count, outputs.seed)?;
        write_samples_csv(&outputs.out_dir.join("samples.csv"), &samples)?;
    }
    Ok(if report.all_satisfied() {
        RunStatus::Satisfied
    } else {
        RunStatus::PrivacyShortfall
    })
}

pub fn evaluate(
    histogram: &Path,
    plan: &Path,
    mode: AccountingMode,
    out: &Path,
) -> Result<RunStatus> {
    let binned = read_histogram(histogram)?;
    let plan = read_plan(plan)?;
    let report = build_report(&binned, &plan, mode)?;
    write_json(out, &ReportFile::from_report(&report))?;
    Ok(if report.all_satisfied() {
        RunStatus::Satisfied
    } else {
        RunStatus::PrivacyShortfall
    })
}

pub fn sample(histogram: &Path, plan: &Path, count: usize, seed: u64, out: &Path) -> Result<()> {
    let binned = read_histogram(histogram)?;
    let plan = read_plan(plan)?;
    let samples = sample_output(&binned, &plan, count, seed)?;
    write_samples_csv(out, &samples)
}

pub fn export_dist(histogram: &Path, plans: &[PathBuf], out: &Path) -> Result<()> {
    let binned = read_histogram(histogram)?;
    let plans = plans
        .iter()
        .map(|p| read_plan(p))
        .collect::<Result<Vec<_>>>()?;
    write_distributions_csv(out, &binned, &plans)
}

fn read_histogram(path: &Path) -> Result<BinnedDataset> {
    let file: HistogramFile = crate::files::read_json(path)?;
    file.to_binned()
        .with_context(|| format!("validating {}", path.display()))
}

fn read_plan(path: &Path) -> Result<VariancePlan> {
    let file: PlanFile = crate::files::read_json(path)?;
    file.to_plan()
        .with_context(|| format!("validating {}", path.display()))
}
