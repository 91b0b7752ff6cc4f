//! Dataset preprocessing: margin-padded min-max normalization and
//! categorization into `K` uniform bins.
//!
//! The normalization interval is widened on both sides by a percentile
//! margin so that after adding Laplace noise with the target `epsilon`,
//! a `p` fraction of the noise mass still lands inside the unit range.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::Distribution;

/// A single numeric column, validated to be finite and non-degenerate.
#[derive(Debug, Clone)]
pub struct RawDataset {
    values: Vec<f64>,
    label: String,
}

impl RawDataset {
    /// Validates that the column is nonempty, has at least two instances
    /// (privacy loss of a lone instance is undefined) and contains only
    /// finite values.
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if values.len() < 2 {
            return Err(Error::TooFewInstances(values.len()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reads one numeric column from a CSV file with a header row.
///
/// Rows that fail to parse abort the read with their 1-based line number;
/// nothing is dropped silently.
pub fn read_numeric_column(path: impl AsRef<Path>, column: &str) -> Result<RawDataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn {
            column: column.to_string(),
        })?;

    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        // line 1 is the header, data starts at line 2
        let line = row + 2;
        let field = record.get(idx).unwrap_or("");
        let parsed: f64 = field.trim().parse().map_err(|_| Error::BadNumber {
            line,
            column: column.to_string(),
            value: field.to_string(),
        })?;
        if !parsed.is_finite() {
            return Err(Error::BadNumber {
                line,
                column: column.to_string(),
                value: field.to_string(),
            });
        }
        values.push(parsed);
    }
    RawDataset::new(values, column)
}

/// Affine map from source units into `(0, 1)`, padded by the percentile
/// margin on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub epsilon_target: f64,
    pub percentile: f64,
    pub sensitivity: f64,
    /// Margin added below `d_min` and above `d_max`; equals the Laplace
    /// quantile `(sensitivity/epsilon) * ln(1/(2 - 2*percentile))`.
    pub margin: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl NormalizationParams {
    /// Width of the padded interval `[d_min - margin, d_max + margin]`.
    pub fn range(&self) -> f64 {
        (self.d_max - self.d_min) + 2.0 * self.margin
    }

    /// Maps a source value into the unit interval.
    pub fn normalize(&self, value: f64) -> f64 {
        (value - (self.d_min - self.margin)) / self.range()
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, unit: f64) -> f64 {
        (self.d_min - self.margin) + unit * self.range()
    }
}

/// Computes the percentile margin and data extremes for a dataset.
///
/// The margin is the two-sided `percentile` quantile radius of a Laplace
/// distribution with scale `sensitivity / epsilon`: the noise mass left
/// outside `[-margin, margin]` is exactly `1 - percentile` per side.
pub fn compute_normalization(
    data: &RawDataset,
    epsilon: f64,
    percentile: f64,
    sensitivity: f64,
) -> Result<NormalizationParams> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !(percentile > 0.5 && percentile < 1.0) {
        return Err(Error::InvalidPercentile(percentile));
    }
    if sensitivity <= 0.0 || !sensitivity.is_finite() {
        return Err(Error::InvalidSensitivity(sensitivity));
    }
    let margin = (sensitivity / epsilon) * (1.0 / (2.0 - 2.0 * percentile)).ln();
    Ok(NormalizationParams {
        epsilon_target: epsilon,
        percentile,
        sensitivity,
        margin,
        d_min: data.min(),
        d_max: data.max(),
    })
}

/// Histogram form of a dataset over `K` uniform bins of `[0, 1]`.
///
/// Bin `k` covers `[k/K, (k+1)/K)` with the final bin closed at 1; its
/// representative value is the midpoint `(2k+1)/(2K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDataset {
    k: usize,
    bin_of: Vec<usize>,
    representatives: Vec<f64>,
    counts: Vec<usize>,
    /// Present when the histogram came from a raw column; synthetic
    /// fixtures built from bin indices carry no normalization.
    normalization: Option<NormalizationParams>,
}

impl BinnedDataset {
    /// Builds a histogram directly from per-instance bin indices.
    pub fn from_bins(k: usize, bin_of: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidBinCount(k));
        }
        if bin_of.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if bin_of.len() < 2 {
            return Err(Error::TooFewInstances(bin_of.len()));
        }
        let mut counts = vec![0usize; k];
        for (instance, &bin) in bin_of.iter().enumerate() {
            if bin >= k {
                return Err(Error::BinOutOfRange { instance, bin, k });
            }
            counts[bin] += 1;
        }
        Ok(Self {
            k,
            bin_of,
            representatives: representatives(k),
            counts,
            normalization: None,
        })
    }

    /// Rebuilds a histogram from previously serialized parts.
    pub fn from_parts(
        k: usize,
        bin_of: Vec<usize>,
        normalization: Option<NormalizationParams>,
    ) -> Result<Self> {
        let mut binned = Self::from_bins(k, bin_of)?;
        binned.normalization = normalization;
        Ok(binned)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of instances.
    pub fn len(&self) -> usize {
        self.bin_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_of.is_empty()
    }

    pub fn bin_of(&self) -> &[usize] {
        &self.bin_of
    }

    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn normalization(&self) -> Option<&NormalizationParams> {
        self.normalization.as_ref()
    }

    /// The empirical sampling-query distribution: bin mass `counts[k] / n`.
    pub fn empirical_distribution(&self) -> Distribution {
        let n = self.len() as f64;
        Distribution::from_masses_unchecked(self.counts.iter().map(|&c| c as f64 / n).collect())
    }
}

/// Midpoints `(2k+1)/(2K)` of the `K` uniform bins.
pub fn representatives(k: usize) -> Vec<f64> {
    (0..k)
        .map(|bin| (2 * bin + 1) as f64 / (2 * k) as f64)
        .collect()
}

/// Index of the bin containing a unit-interval value.
pub fn bin_index(unit: f64, k: usize) -> usize {
    ((unit * k as f64).floor() as usize).min(k - 1)
}

/// Normalizes every value and assigns it to its bin.
///
/// The positive margin guarantees every normalized value lies strictly
/// inside `(0, 1)`, including the all-equal-values case.
pub fn normalize_and_bin(
    data: &RawDataset,
    params: &NormalizationParams,
    k: usize,
) -> Result<BinnedDataset> {
    if k < 2 {
        return Err(Error::InvalidBinCount(k));
    }
    let (data_min, data_max) = (data.min(), data.max());
    if data_min != params.d_min || data_max != params.d_max {
        return Err(Error::ExtremesMismatch {
            params_min: params.d_min,
            params_max: params.d_max,
            data_min,
            data_max,
        });
    }
    let bin_of = data
        .values()
        .iter()
        .map(|&v| bin_index(params.normalize(v), k))
        .collect();
    let mut binned = BinnedDataset::from_bins(k, bin_of)?;
    binned.normalization = Some(params.clone());
    Ok(binned)
}
