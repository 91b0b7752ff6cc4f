//! On-disk artifact schemas. Every JSON document carries a
//! `format_version` field, currently 1.

use std::fs;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use serde::{Deserialize, Serialize};

use lapwise::mechanism::{build_mass_matrix, mixture_distribution};
use lapwise::metrics::UtilityMetrics;
use lapwise::pdp::{AccountingMode, InstanceRecord, PrivacyReport};
use lapwise::{BinnedDataset, Distribution, NormalizationParams, VariancePlan};

pub const FORMAT_VERSION: u32 = 1;

/// `histogram.json`: the binned dataset with its normalization echoed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramFile {
    pub format_version: u32,
    pub k: usize,
    pub bin_of: Vec<usize>,
    pub representatives: Vec<f64>,
    pub counts: Vec<usize>,
    pub normalization: Option<NormalizationParams>,
}

impl HistogramFile {
    pub fn from_binned(binned: &BinnedDataset) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            k: binned.k(),
            bin_of: binned.bin_of().to_vec(),
            representatives: binned.representatives().to_vec(),
            counts: binned.counts().to_vec(),
            normalization: binned.normalization().cloned(),
        }
    }

    pub fn to_binned(&self) -> Result<BinnedDataset> {
        let binned =
            BinnedDataset::from_parts(self.k, self.bin_of.clone(), self.normalization.clone())?;
        ensure!(
            binned.counts() == &self.counts[..],
            "histogram counts do not match its bin assignments"
        );
        Ok(binned)
    }
}

/// `plan.json`: the action set and the per-instance scale assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub format_version: u32,
    pub multipliers: Vec<f64>,
    pub scales: Vec<f64>,
    pub assignment: Vec<usize>,
    pub epsilon: f64,
    pub sensitivity: f64,
}

impl PlanFile {
    pub fn from_plan(plan: &VariancePlan) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            multipliers: plan.multipliers().to_vec(),
            scales: plan.scales().to_vec(),
            assignment: plan.assignment().to_vec(),
            epsilon: plan.epsilon(),
            sensitivity: plan.sensitivity(),
        }
    }

    pub fn to_plan(&self) -> Result<VariancePlan> {
        let plan = VariancePlan::from_parts(
            self.multipliers.clone(),
            self.assignment.clone(),
            self.epsilon,
            self.sensitivity,
        )?;
        Ok(plan)
    }
}

/// `report.json`: per-instance accounting, payoff components, bound
/// diagnostics and distribution metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub epsilon_target: f64,
    pub mode: AccountingMode,
    pub p_e: usize,
    pub p_u: f64,
    pub payoff: f64,
    pub bound_main: f64,
    pub bound_appendix: f64,
    pub v_min_value: f64,
    pub metrics: UtilityMetrics,
    pub per_instance: Vec<InstanceRecord>,
}

impl ReportFile {
    pub fn from_report(report: &PrivacyReport) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            epsilon_target: report.epsilon_target,
            mode: report.mode,
            p_e: report.p_e,
            p_u: report.p_u,
            payoff: report.payoff,
            bound_main: report.bound_main,
            bound_appendix: report.bound_appendix,
            v_min_value: report.v_min_value,
            metrics: report.metrics.clone(),
            per_instance: report.per_instance.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value).context("serializing JSON")?;
    buf.push(b'\n');
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Single-column CSV of privatized samples.
pub fn write_samples_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut out = String::from("value\n");
    for s in samples {
        out.push_str(&format!("{s}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// One row per bin: index, representative, original mass, one mechanism
/// mass column per plan.
pub fn write_distributions_csv(
    path: &Path,
    binned: &BinnedDataset,
    plans: &[VariancePlan],
) -> Result<()> {
    let columns = distribution_columns(binned, plans)?;
    let mut header = String::from("bin_index,representative,original_mass");
    for i in 0..plans.len() {
        if i == 0 {
            header.push_str(",mechanism_mass");
        } else {
            header.push_str(&format!(",mechanism_mass_{}", i + 1));
        }
    }
    let mut out = header;
    out.push('\n');
    let original = binned.empirical_distribution();
    for bin in 0..binned.k() {
        out.push_str(&format!(
            "{},{},{}",
            bin,
            binned.representatives()[bin],
            original.masses()[bin]
        ));
        for column in &columns {
            out.push_str(&format!(",{}", column.masses()[bin]));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn distribution_columns(
    binned: &BinnedDataset,
    plans: &[VariancePlan],
) -> Result<Vec<Distribution>> {
    plans
        .iter()
        .map(|plan| {
            let mm =
                build_mass_matrix(binned, plan).context("plan does not match the histogram")?;
            Ok(mixture_distribution(&mm))
        })
        .collect()
}
