//! Per-instance privacy-loss accounting.
//!
//! For the random sampling query over a binned dataset, removing instance
//! `i` changes the output distribution from the full mixture `S_x / n` to
//! the leave-one-out mixture `(S_x - m_{i,x}) / (n - 1)`, where `S_x` is
//! the column sum of the mass matrix. The per-instance privacy loss is the
//! largest absolute log-ratio between the two, and singleton bins attain
//! the supremum over all output subsets (a ratio of sums never exceeds the
//! largest per-term ratio).
//!
//! Two accounting modes are exposed: `exact` uses the correctly normalized
//! mixtures above; `conservative` drops the `n/(n-1)` normalization and
//! bounds the loss by `max_x ln(1 + m_{i,x} / M_{-i,x})`, which is the
//! quantity the sufficiency bounds below are stated for.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game;
use crate::mechanism::{build_mass_matrix, mixture_distribution, MassMatrix, VariancePlan};
use crate::metrics::{utility_metrics, UtilityMetrics};
use crate::preprocess::BinnedDataset;

/// Which privacy-loss definition the satisfied flags use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountingMode {
    Exact,
    Conservative,
}

impl fmt::Display for AccountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccountingMode::Exact => write!(f, "exact"),
            AccountingMode::Conservative => write!(f, "conservative"),
        }
    }
}

impl FromStr for AccountingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(AccountingMode::Exact),
            "conservative" => Ok(AccountingMode::Conservative),
            other => Err(Error::InvalidConfig(format!(
                "unknown accounting mode {other:?} (expected exact or conservative)"
            ))),
        }
    }
}

pub(crate) fn column_sums(mm: &MassMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; mm.k()];
    for row in mm.rows() {
        for (acc, &m) in sums.iter_mut().zip(row) {
            *acc += m;
        }
    }
    sums
}

/// Largest two-sided mixture ratio for one instance, `exp` of its exact
/// privacy loss. `column_sums` must include the instance's own row.
pub(crate) fn max_ratio_exact(column_sums: &[f64], row: &[f64], n: usize) -> f64 {
    let nf = n as f64;
    let n1 = (n - 1) as f64;
    let mut worst = 1.0f64;
    for (&s, &m) in column_sums.iter().zip(row) {
        let without = s - m;
        if without <= 0.0 {
            if s > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        let r = (s * n1) / (without * nf);
        let r = if r >= 1.0 { r } else { 1.0 / r };
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Largest unnormalized ratio `(m + M) / M`, `exp` of the conservative
/// privacy loss. Always at least 1.
pub(crate) fn max_ratio_conservative(column_sums: &[f64], row: &[f64]) -> f64 {
    let mut worst = 1.0f64;
    for (&s, &m) in column_sums.iter().zip(row) {
        let without = s - m;
        if without <= 0.0 {
            if s > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        let r = s / without;
        if r > worst {
            worst = r;
        }
    }
    worst
}

fn check_instance(mm: &MassMatrix, instance: usize) -> Result<()> {
    if mm.n() < 2 {
        return Err(Error::TooFewInstances(mm.n()));
    }
    if instance >= mm.n() {
        return Err(Error::IndexOutOfRange {
            what: "instances",
            index: instance,
            len: mm.n(),
        });
    }
    Ok(())
}

/// Exact two-sided privacy loss of one instance. Zero leave-one-out mass
/// under positive instance mass reports `+inf` rather than an error.
pub fn epsilon_exact(mm: &MassMatrix, instance: usize) -> Result<f64> {
    check_instance(mm, instance)?;
    let sums = column_sums(mm);
    Ok(max_ratio_exact(&sums, mm.row(instance), mm.n()).ln())
}

/// Conservative upper bound on the privacy loss of one instance.
pub fn epsilon_conservative(mm: &MassMatrix, instance: usize) -> Result<f64> {
    check_instance(mm, instance)?;
    let sums = column_sums(mm);
    Ok(max_ratio_conservative(&sums, mm.row(instance)).ln())
}

/// Counts the instances whose privacy loss stays within `epsilon` under
/// the chosen mode. Returns the count and the per-instance flags.
pub fn privacy_payoff(
    mm: &MassMatrix,
    epsilon: f64,
    mode: AccountingMode,
) -> Result<(usize, Vec<bool>)> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if mm.n() < 2 {
        return Err(Error::TooFewInstances(mm.n()));
    }
    let sums = column_sums(mm);
    let threshold = epsilon.exp();
    let flags: Vec<bool> = (0..mm.n())
        .map(|i| {
            let ratio = match mode {
                AccountingMode::Exact => max_ratio_exact(&sums, mm.row(i), mm.n()),
                AccountingMode::Conservative => max_ratio_conservative(&sums, mm.row(i)),
            };
            ratio <= threshold
        })
        .collect();
    let count = flags.iter().filter(|&&f| f).count();
    Ok((count, flags))
}

/// Which form of the smallest-scale sufficiency bound to evaluate.
///
/// `Main` treats the leave-one-out mass floor at density level;
/// `Appendix` divides the floor by the bin count, matching how bin masses
/// scale, and is the variant used for sufficiency checks on binned data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundVariant {
    Main,
    Appendix,
}

/// Smallest Laplace scale whose action set guarantees the privacy target
/// for every instance at an equilibrium of the assignment game.
pub fn min_scale_bound(epsilon: f64, n: usize, variant: BoundVariant, k: usize) -> Result<f64> {
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if n < 2 {
        return Err(Error::TooFewInstances(n));
    }
    if k < 2 {
        return Err(Error::InvalidBinCount(k));
    }
    let growth = (n - 1) as f64 * epsilon.exp_m1();
    let arg = match variant {
        BoundVariant::Main => growth,
        BoundVariant::Appendix => growth / k as f64,
    };
    Ok(1.0 / arg.ln_1p())
}

/// Closed-form floor `1 / (exp(1/b_min) - 1)` on the per-instance output
/// mass used by the sufficiency analysis.
pub fn density_floor(b_min: f64) -> Result<f64> {
    if b_min.is_nan() || b_min <= 0.0 {
        return Err(Error::InvalidScale(b_min));
    }
    Ok(1.0 / (1.0 / b_min).exp_m1())
}

/// One instance's accounting entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub bin: usize,
    pub scale: f64,
    #[serde(with = "crate::serde_nonfinite")]
    pub epsilon_exact: f64,
    #[serde(with = "crate::serde_nonfinite")]
    pub epsilon_conservative: f64,
    pub satisfied: bool,
}

/// Full accounting of a plan against its privacy target, with bound
/// diagnostics and utility metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
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

impl PrivacyReport {
    pub fn n(&self) -> usize {
        self.per_instance.len()
    }

    pub fn all_satisfied(&self) -> bool {
        self.p_e == self.per_instance.len()
    }
}

/// Evaluates a plan end to end: per-instance losses under both modes,
/// satisfied flags under `mode`, payoff components, sufficiency bounds and
/// the four distribution metrics.
pub fn build_report(
    binned: &BinnedDataset,
    plan: &VariancePlan,
    mode: AccountingMode,
) -> Result<PrivacyReport> {
    let epsilon = plan.epsilon();
    let mm = build_mass_matrix(binned, plan)?;
    let sums = column_sums(&mm);
    let (p_e, flags) = privacy_payoff(&mm, epsilon, mode)?;

    let empirical = binned.empirical_distribution();
    let mixture = mixture_distribution(&mm);
    let p_u = game::utility_payoff(&empirical, &mixture, binned.k())?;
    let metrics = utility_metrics(&empirical, &mixture, binned.representatives())?;

    let per_instance = (0..binned.len())
        .map(|i| InstanceRecord {
            index: i,
            bin: binned.bin_of()[i],
            scale: plan.scale_of(i),
            epsilon_exact: max_ratio_exact(&sums, mm.row(i), mm.n()).ln(),
            epsilon_conservative: max_ratio_conservative(&sums, mm.row(i)).ln(),
            satisfied: flags[i],
        })
        .collect();

    Ok(PrivacyReport {
        epsilon_target: epsilon,
        mode,
        p_e,
        p_u,
        payoff: p_e as f64 + p_u,
        bound_main: min_scale_bound(epsilon, binned.len(), BoundVariant::Main, binned.k())?,
        bound_appendix: min_scale_bound(epsilon, binned.len(), BoundVariant::Appendix, binned.k())?,
        v_min_value: density_floor(plan.b_min())?,
        metrics,
        per_instance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MassMatrix;
    use crate::preprocess::BinnedDataset;

    fn pair_matrix() -> MassMatrix {
        MassMatrix::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    /// Exhaustive log-ratio over every nonempty proper subset of bins.
    fn subset_sup(mm: &MassMatrix, instance: usize) -> f64 {
        let sums = column_sums(mm);
        let n = mm.n() as f64;
        let row = mm.row(instance);
        let k = mm.k();
        let mut sup = 0.0f64;
        for mask in 1..(1usize << k) {
            let mut with = 0.0;
            let mut without = 0.0;
            for x in 0..k {
                if mask & (1 << x) != 0 {
                    with += sums[x] / n;
                    without += (sums[x] - row[x]) / (n - 1.0);
                }
            }
            sup = sup.max((with / without).ln().abs());
        }
        sup
    }

    #[test]
    fn identical_rows_have_zero_exact_loss() {
        let row = vec![0.25, 0.5, 0.25];
        let mm = MassMatrix::from_rows(vec![row.clone(), row.clone(), row]).unwrap();
        for i in 0..3 {
            assert!(epsilon_exact(&mm, i).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn exact_pair_example_and_subset_oracle() {
        let mm = pair_matrix();
        let eps = epsilon_exact(&mm, 0).unwrap();
        assert!((eps - 5.0f64.ln()).abs() < 1e-12);
        // the singleton-bin maximum matches the supremum over all subsets
        assert!((eps - subset_sup(&mm, 0)).abs() < 1e-12);
        assert!((epsilon_exact(&mm, 1).unwrap() - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn shared_bin_exact_loss_vanishes_with_tiny_noise() {
        let binned = BinnedDataset::from_bins(101, vec![50, 50, 50]).unwrap();
        let plan = VariancePlan::from_parts(vec![0.001], vec![0, 0, 0], 1.0, 1.0).unwrap();
        let mm = build_mass_matrix(&binned, &plan).unwrap();
        for i in 0..3 {
            assert!(epsilon_exact(&mm, i).unwrap().abs() < 1e-9);
            // ...while the conservative loss stays at ln(3/2)
            assert!((epsilon_conservative(&mm, i).unwrap() - 1.5f64.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn conservative_identical_rows_is_log_n_over_n1() {
        for n in 2..6 {
            let row = vec![0.25, 0.5, 0.25];
            let mm = MassMatrix::from_rows(vec![row; n]).unwrap();
            let want = (n as f64 / (n as f64 - 1.0)).ln();
            for i in 0..n {
                assert!((epsilon_conservative(&mm, i).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conservative_pair_example() {
        let mm = pair_matrix();
        // per-bin enumeration: max(ln(1.0/0.1), ln(1.0/0.9)) = ln 10
        assert!((epsilon_conservative(&mm, 0).unwrap() - 10.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn payoff_counts_satisfied_instances() {
        let row = vec![0.5, 0.5];
        let mm = MassMatrix::from_rows(vec![row.clone(), row.clone(), row]).unwrap();
        let (p_e, flags) = privacy_payoff(&mm, 0.25, AccountingMode::Exact).unwrap();
        assert_eq!(p_e, 3);
        assert!(flags.iter().all(|&f| f));

        let mm = pair_matrix();
        let (p_e, _) = privacy_payoff(&mm, 1.0, AccountingMode::Exact).unwrap();
        assert_eq!(p_e, 0);
        let (p_e, _) = privacy_payoff(&mm, 2.0, AccountingMode::Exact).unwrap();
        assert_eq!(p_e, 2);
    }

    #[test]
    fn scale_bound_reference_points() {
        let b = min_scale_bound(1.0, 1307, BoundVariant::Main, 101).unwrap();
        assert!((b - 0.1296).abs() < 1e-3);

        let b = min_scale_bound(2.0f64.ln(), 2, BoundVariant::Main, 101).unwrap();
        assert!((b - 1.0 / 2.0f64.ln()).abs() < 1e-12);

        let b = min_scale_bound(1.0, 1307, BoundVariant::Appendix, 101).unwrap();
        assert!((b - 0.317970).abs() < 1e-6);

        assert!(min_scale_bound(1.0, 1, BoundVariant::Main, 101).is_err());
        assert!(min_scale_bound(0.0, 10, BoundVariant::Main, 101).is_err());
    }

    #[test]
    fn scale_bound_matches_numeric_inversion() {
        // bisect 1/b = ln(1 + (n-1)(e^eps - 1)/K) and compare
        for &(eps, n, k) in &[(1.0f64, 1307usize, 101usize), (0.5, 10, 11), (2.0, 50, 101)] {
            for &variant in &[BoundVariant::Main, BoundVariant::Appendix] {
                let target = {
                    let g = (n - 1) as f64 * eps.exp_m1();
                    match variant {
                        BoundVariant::Main => g,
                        BoundVariant::Appendix => g / k as f64,
                    }
                };
                let f = |b: f64| (1.0 + target).ln() - 1.0 / b;
                let (mut lo, mut hi) = (1e-9, 1e9);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let got = min_scale_bound(eps, n, variant, k).unwrap();
                assert!((got - lo).abs() < 1e-6 * got.max(1.0));
            }
        }
    }

    #[test]
    fn density_floor_reference_points() {
        assert!((density_floor(1.0 / 2.0f64.ln()).unwrap() - 1.0).abs() < 1e-12);
        assert!((density_floor(0.5).unwrap() - 0.15651764274966565).abs() < 1e-12);
        // as b grows the closed form approaches b itself
        let b = 1e6;
        assert!((density_floor(b).unwrap() / b - 1.0).abs() < 1e-5);
        assert!(density_floor(0.0).is_err());
    }

    #[test]
    fn density_floor_vs_numerical_minimization() {
        // Grid-minimize the normalized truncated density over mu, x in
        // [0,1] and b >= b_min. The numeric minimum sits at mu=0, x=1,
        // b=b_min and equals density_floor(b_min) / b_min: the closed form
        // carries an extra factor of b relative to the actual density
        // minimum, and this oracle pins that relationship down.
        for &b_min in &[0.5, 1.0, 2.0] {
            let mut numeric = f64::INFINITY;
            for bi in 0..=3 {
                let b = b_min * (1.0 + bi as f64);
                for mi in 0..=20 {
                    let mu = mi as f64 / 20.0;
                    let z = -0.5 * (-(1.0 - mu) / b).exp_m1() - 0.5 * (-mu / b).exp_m1();
                    for xi in 0..=20 {
                        let x = xi as f64 / 20.0;
                        let d = ((-(x - mu).abs() / b).exp() / (2.0 * b)) / z;
                        numeric = numeric.min(d);
                    }
                }
            }
            let closed = density_floor(b_min).unwrap();
            assert!(
                (numeric - closed / b_min).abs() < 1e-9 * numeric.max(1.0),
                "b_min={b_min}: numeric {numeric} vs closed/b {}",
                closed / b_min
            );
        }
    }

    #[test]
    fn infinite_loss_on_zero_leave_one_out_mass() {
        let mm = MassMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(epsilon_exact(&mm, 0).unwrap().is_infinite());
        assert!(epsilon_conservative(&mm, 0).unwrap().is_infinite());
        let (p_e, flags) = privacy_payoff(&mm, 5.0, AccountingMode::Exact).unwrap();
        assert_eq!(p_e, 0);
        assert!(flags.iter().all(|&f| !f));
    }

    #[test]
    fn report_is_complete_and_consistent() {
        let binned = BinnedDataset::from_bins(101, vec![10, 10, 50, 90]).unwrap();
        let plan =
            VariancePlan::from_parts(vec![2.0, 1.0, 0.33], vec![0, 0, 1, 0], 1.0, 1.0).unwrap();
        let report = build_report(&binned, &plan, AccountingMode::Exact).unwrap();
        assert_eq!(report.n(), 4);
        assert_eq!(
            report.p_e,
            report.per_instance.iter().filter(|r| r.satisfied).count()
        );
        assert!((report.payoff - (report.p_e as f64 + report.p_u)).abs() < 1e-12);
        assert!(report.bound_main < report.bound_appendix);
        for r in &report.per_instance {
            assert!(r.epsilon_exact >= 0.0);
            assert!(r.epsilon_conservative >= 0.0);
            assert_eq!(r.satisfied, r.epsilon_exact <= 1.0);
        }
    }
}
