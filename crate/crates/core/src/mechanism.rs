//! Truncated-Laplace output masses, mixture distributions, the
//! identical-scale baseline, and a seeded inverse-CDF sampler.
//!
//! Noise support is restricted to `[0, 1]` by renormalizing the Laplace
//! density, so every output stays inside the binned domain. Bin masses are
//! CDF differences computed branch-wise with `exp_m1` to stay accurate when
//! the scale is much smaller than a bin width.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::BinnedDataset;

/// A probability distribution over `K` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    masses: Vec<f64>,
}

impl Distribution {
    /// Validates nonnegativity and unit total mass (within 1e-9).
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        let sum: f64 = masses.iter().sum();
        if masses.iter().any(|&m| m.is_nan() || m < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotADistribution { sum });
        }
        Ok(Self { masses })
    }

    /// For masses already known to be valid by construction.
    pub(crate) fn from_masses_unchecked(masses: Vec<f64>) -> Self {
        Self { masses }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// The discrete set of Laplace scales the solvers choose from.
///
/// Scales are expressed as multiples of `sensitivity / epsilon`, mirroring
/// how the identical-scale baseline is calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    multipliers: Vec<f64>,
    scales: Vec<f64>,
    epsilon: f64,
    sensitivity: f64,
}

impl ActionSet {
    pub const DEFAULT_MULTIPLIERS: [f64; 5] = [3.0, 2.0, 1.0, 0.33, 0.2];

    pub fn new(multipliers: Vec<f64>, epsilon: f64, sensitivity: f64) -> Result<Self> {
        if multipliers.is_empty() {
            return Err(Error::EmptyActionSet);
        }
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        if sensitivity <= 0.0 || !sensitivity.is_finite() {
            return Err(Error::InvalidSensitivity(sensitivity));
        }
        let unit = sensitivity / epsilon;
        let scales: Vec<f64> = multipliers.iter().map(|&m| m * unit).collect();
        for &s in &scales {
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::InvalidScale(s));
            }
        }
        Ok(Self {
            multipliers,
            scales,
            epsilon,
            sensitivity,
        })
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Smallest scale in the set.
    pub fn b_min(&self) -> f64 {
        self.scales.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest scale (first occurrence on ties).
    pub fn max_scale_index(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.scales.iter().enumerate() {
            if s > self.scales[best] {
                best = i;
            }
        }
        best
    }

    /// Attaches a per-instance assignment, producing a full plan.
    pub fn plan(&self, assignment: Vec<usize>) -> Result<VariancePlan> {
        for (instance, &idx) in assignment.iter().enumerate() {
            if idx >= self.scales.len() {
                return Err(Error::IndexOutOfRange {
                    what: "scales",
                    index: idx,
                    len: self.scales.len(),
                });
            }
            let _ = instance;
        }
        Ok(VariancePlan {
            multipliers: self.multipliers.clone(),
            scales: self.scales.clone(),
            assignment,
            epsilon: self.epsilon,
            sensitivity: self.sensitivity,
        })
    }
}

/// An action set together with one scale choice per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePlan {
    multipliers: Vec<f64>,
    scales: Vec<f64>,
    assignment: Vec<usize>,
    epsilon: f64,
    sensitivity: f64,
}

impl VariancePlan {
    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// Scale assigned to one instance.
    pub fn scale_of(&self, instance: usize) -> f64 {
        self.scales[self.assignment[instance]]
    }

    pub fn b_min(&self) -> f64 {
        self.scales.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn action_set(&self) -> Result<ActionSet> {
        ActionSet::new(self.multipliers.clone(), self.epsilon, self.sensitivity)
    }

    pub fn from_parts(
        multipliers: Vec<f64>,
        assignment: Vec<usize>,
        epsilon: f64,
        sensitivity: f64,
    ) -> Result<Self> {
        ActionSet::new(multipliers, epsilon, sensitivity)?.plan(assignment)
    }
}

/// The identical-scale plan: every instance gets `sensitivity / epsilon`.
pub fn baseline_plan(
    binned: &BinnedDataset,
    epsilon: f64,
    sensitivity: f64,
) -> Result<VariancePlan> {
    let action = ActionSet::new(vec![1.0], epsilon, sensitivity)?;
    action.plan(vec![0; binned.len()])
}

/// Unnormalized Laplace CDF difference `F(hi) - F(lo)` for location `mu`
/// and scale `b`, computed branch-wise to avoid cancellation.
fn laplace_interval_mass(mu: f64, b: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if hi <= mu {
        // both endpoints in the lower exponential branch
        0.5 * ((hi - mu) / b).exp() * (-((lo - hi) / b).exp_m1())
    } else if lo >= mu {
        0.5 * ((mu - lo) / b).exp() * (-((lo - hi) / b).exp_m1())
    } else {
        -0.5 * (-(hi - mu) / b).exp_m1() - 0.5 * (-(mu - lo) / b).exp_m1()
    }
}

/// Probability that truncated Laplace noise centered at `mu` with scale `b`
/// lands in `[bin_lo, bin_hi]`, renormalized to the unit support.
pub fn truncated_bin_mass(mu: f64, b: f64, bin_lo: f64, bin_hi: f64) -> Result<f64> {
    if b <= 0.0 || !b.is_finite() {
        return Err(Error::InvalidScale(b));
    }
    if !(0.0..=1.0).contains(&bin_lo) || !(0.0..=1.0).contains(&bin_hi) || bin_lo >= bin_hi {
        return Err(Error::InvalidBinInterval {
            lo: bin_lo,
            hi: bin_hi,
        });
    }
    Ok(laplace_interval_mass(mu, b, bin_lo, bin_hi) / laplace_interval_mass(mu, b, 0.0, 1.0))
}

/// One instance's output masses over the `K` uniform bins.
pub fn mass_row(mu: f64, b: f64, k: usize) -> Result<Vec<f64>> {
    if b <= 0.0 || !b.is_finite() {
        return Err(Error::InvalidScale(b));
    }
    if k < 2 {
        return Err(Error::InvalidBinCount(k));
    }
    Ok(mass_row_unchecked(mu, b, k))
}

pub(crate) fn mass_row_unchecked(mu: f64, b: f64, k: usize) -> Vec<f64> {
    let total = laplace_interval_mass(mu, b, 0.0, 1.0);
    (0..k)
        .map(|bin| {
            let lo = bin as f64 / k as f64;
            let hi = (bin + 1) as f64 / k as f64;
            laplace_interval_mass(mu, b, lo, hi) / total
        })
        .collect()
}

/// Per-instance, per-bin output masses of the truncated mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct MassMatrix {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl MassMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, instance: usize) -> &[f64] {
        &self.data[instance * self.k..(instance + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    /// Builds a matrix directly from rows; rows must share one length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewInstances(n));
        }
        let k = rows[0].len();
        if k < 2 {
            return Err(Error::InvalidBinCount(k));
        }
        let mut data = Vec::with_capacity(n * k);
        for row in &rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    left: k,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, k, data })
    }
}

/// Assembles the mass matrix for a plan: row `i` is the mass row of
/// instance `i`'s bin representative at its assigned scale.
pub fn build_mass_matrix(binned: &BinnedDataset, plan: &VariancePlan) -> Result<MassMatrix> {
    if plan.assignment().len() != binned.len() {
        return Err(Error::AssignmentLength {
            expected: binned.len(),
            got: plan.assignment().len(),
        });
    }
    let k = binned.k();
    let reps = binned.representatives();
    let mut data = Vec::with_capacity(binned.len() * k);
    for (instance, &bin) in binned.bin_of().iter().enumerate() {
        let idx = plan.assignment()[instance];
        if idx >= plan.scales().len() {
            return Err(Error::IndexOutOfRange {
                what: "scales",
                index: idx,
                len: plan.scales().len(),
            });
        }
        data.extend_from_slice(&mass_row_unchecked(reps[bin], plan.scales()[idx], k));
    }
    Ok(MassMatrix {
        n: binned.len(),
        k,
        data,
    })
}

/// The randomized sampling-query output distribution: the row mean.
pub fn mixture_distribution(mm: &MassMatrix) -> Distribution {
    let n = mm.n() as f64;
    let mut masses = vec![0.0; mm.k()];
    for row in mm.rows() {
        for (acc, &m) in masses.iter_mut().zip(row) {
            *acc += m;
        }
    }
    for m in &mut masses {
        *m /= n;
    }
    Distribution::from_masses_unchecked(masses)
}

/// Draws `count` privatized outputs: a uniformly chosen instance plus its
/// truncated Laplace noise, realized through the inverse CDF restricted to
/// `[0, 1]`. Deterministic for a fixed seed.
pub fn sample_output(
    binned: &BinnedDataset,
    plan: &VariancePlan,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::EmptySampleRequest);
    }
    if plan.assignment().len() != binned.len() {
        return Err(Error::AssignmentLength {
            expected: binned.len(),
            got: plan.assignment().len(),
        });
    }
    let reps = binned.representatives();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let instance = rng.random_range(0..binned.len());
        let mu = reps[binned.bin_of()[instance]];
        let b = plan.scale_of(instance);
        let u: f64 = rng.random();
        out.push(truncated_laplace_inverse(mu, b, u));
    }
    Ok(out)
}

/// Inverse CDF of the `[0, 1]`-truncated Laplace at quantile `u` of the
/// truncated mass.
fn truncated_laplace_inverse(mu: f64, b: f64, u: f64) -> f64 {
    let f0 = laplace_cdf(mu, b, 0.0);
    let f1 = laplace_cdf(mu, b, 1.0);
    let target = f0 + u * (f1 - f0);
    let x = if target < 0.5 {
        mu + b * (2.0 * target).ln()
    } else {
        mu - b * (2.0 * (1.0 - target)).ln()
    };
    x.clamp(0.0, 1.0)
}

fn laplace_cdf(mu: f64, b: f64, x: f64) -> f64 {
    if x < mu {
        0.5 * ((x - mu) / b).exp()
    } else {
        1.0 - 0.5 * (-(x - mu) / b).exp()
    }
}
