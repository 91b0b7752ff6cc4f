//! Similarity metrics between the original empirical distribution and a
//! mechanism's output distribution. All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::Distribution;

/// Default support threshold for the Jaccard index.
pub const JACCARD_THRESHOLD: f64 = 0.001;

/// `KL(p || q) = sum p_k ln(p_k / q_k)` with the `0 ln 0 = 0` convention.
/// Returns `+inf` when `q` has zero mass where `p` does not.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    let mut sum = 0.0;
    for (&pk, &qk) in p.masses().iter().zip(q.masses()) {
        if pk == 0.0 {
            continue;
        }
        if qk == 0.0 {
            return Ok(f64::INFINITY);
        }
        sum += pk * (pk / qk).ln();
    }
    Ok(sum)
}

/// Absolute difference between the standard deviations of the two
/// distributions over the bin representative values.
pub fn l1_sd_loss(p: &Distribution, q: &Distribution, representatives: &[f64]) -> Result<f64> {
    check_dims(p, q)?;
    if representatives.len() != p.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: representatives.len(),
        });
    }
    Ok((std_dev(p, representatives) - std_dev(q, representatives)).abs())
}

fn std_dev(d: &Distribution, xs: &[f64]) -> f64 {
    let mean: f64 = d.masses().iter().zip(xs).map(|(&m, &x)| m * x).sum();
    let second: f64 = d.masses().iter().zip(xs).map(|(&m, &x)| m * x * x).sum();
    (second - mean * mean).max(0.0).sqrt()
}

/// Intersection over union of the bin sets whose mass exceeds `threshold`.
/// Two empty supports count as identical (index 1).
pub fn jaccard_index(p: &Distribution, q: &Distribution, threshold: f64) -> Result<f64> {
    check_dims(p, q)?;
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (&pk, &qk) in p.masses().iter().zip(q.masses()) {
        let in_p = pk > threshold;
        let in_q = qk > threshold;
        if in_p && in_q {
            intersection += 1;
        }
        if in_p || in_q {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(intersection as f64 / union as f64)
}

/// Cosine of the angle between the two mass vectors.
pub fn cosine_similarity(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_dims(p, q)?;
    let dot: f64 = p
        .masses()
        .iter()
        .zip(q.masses())
        .map(|(&a, &b)| a * b)
        .sum();
    let np: f64 = p.masses().iter().map(|&a| a * a).sum::<f64>().sqrt();
    let nq: f64 = q.masses().iter().map(|&a| a * a).sum::<f64>().sqrt();
    if np == 0.0 || nq == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(dot / (np * nq))
}

fn check_dims(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// The metric block reported for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityMetrics {
    #[serde(with = "crate::serde_nonfinite")]
    pub kl: f64,
    pub l1_sd: f64,
    #[serde(rename = "jaccard@0.001")]
    pub jaccard: f64,
    pub cosine: f64,
}

/// Evaluates all four metrics of `q` against the reference `p`.
pub fn utility_metrics(
    p: &Distribution,
    q: &Distribution,
    representatives: &[f64],
) -> Result<UtilityMetrics> {
    Ok(UtilityMetrics {
        kl: kl_divergence(p, q)?,
        l1_sd: l1_sd_loss(p, q, representatives)?,
        jaccard: jaccard_index(p, q, JACCARD_THRESHOLD)?,
        cosine: cosine_similarity(p, q)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(masses: &[f64]) -> Distribution {
        Distribution::new(masses.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);

        let point = dist(&[1.0, 0.0, 0.0, 0.0]);
        let uniform = dist(&[0.25; 4]);
        assert!((kl_divergence(&point, &uniform).unwrap() - 4.0f64.ln()).abs() < 1e-12);

        // term-by-term oracle
        let a = dist(&[0.75, 0.25]);
        let b = dist(&[0.5, 0.5]);
        let by_hand = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
        let got = kl_divergence(&a, &b).unwrap();
        assert!((got - by_hand).abs() < 1e-15);
        assert!((got - 0.13081).abs() < 1e-5);

        assert!(kl_divergence(&point, &dist(&[0.0, 1.0, 0.0, 0.0]))
            .unwrap()
            .is_infinite());
        assert!(kl_divergence(&p, &uniform).is_err());
    }

    #[test]
    fn sd_loss_examples() {
        let reps = vec![0.25, 0.5, 0.75];
        let p = dist(&[0.2, 0.5, 0.3]);
        assert_eq!(l1_sd_loss(&p, &p, &reps).unwrap(), 0.0);

        let point = dist(&[0.0, 1.0, 0.0]);
        let split = dist(&[0.5, 0.0, 0.5]);
        assert!((l1_sd_loss(&point, &split, &reps).unwrap() - 0.25).abs() < 1e-12);

        // first/second moment oracle over K=5
        let reps5: Vec<f64> = (0..5).map(|i| (2 * i + 1) as f64 / 10.0).collect();
        let a = dist(&[0.1, 0.2, 0.4, 0.2, 0.1]);
        let b = dist(&[0.3, 0.1, 0.2, 0.1, 0.3]);
        let moments = |d: &Distribution| {
            let m1: f64 = d.masses().iter().zip(&reps5).map(|(&m, &x)| m * x).sum();
            let m2: f64 = d
                .masses()
                .iter()
                .zip(&reps5)
                .map(|(&m, &x)| m * x * x)
                .sum();
            (m2 - m1 * m1).sqrt()
        };
        let want = (moments(&a) - moments(&b)).abs();
        assert!((l1_sd_loss(&a, &b, &reps5).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn jaccard_examples() {
        let p = dist(&[0.6, 0.4, 0.0]);
        assert_eq!(jaccard_index(&p, &p, JACCARD_THRESHOLD).unwrap(), 1.0);

        let q = dist(&[0.0, 0.0, 1.0]);
        let r = dist(&[1.0, 0.0, 0.0]);
        assert_eq!(jaccard_index(&q, &r, JACCARD_THRESHOLD).unwrap(), 0.0);

        // supports {0,1} and {1,2}
        let a = dist(&[0.5, 0.5, 0.0]);
        let b = dist(&[0.0, 0.5, 0.5]);
        assert!((jaccard_index(&a, &b, JACCARD_THRESHOLD).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        // masses at the threshold are excluded, so both sets can be empty
        let tiny = dist(&[0.001, 0.999]);
        assert_eq!(jaccard_index(&tiny, &tiny, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cosine_examples() {
        let p = dist(&[0.6, 0.4]);
        assert!((cosine_similarity(&p, &p).unwrap() - 1.0).abs() < 1e-12);

        let q = dist(&[1.0, 0.0]);
        let r = dist(&[0.0, 1.0]);
        assert_eq!(cosine_similarity(&q, &r).unwrap(), 0.0);

        // dot-product oracle
        let a = dist(&[0.75, 0.25]);
        let b = dist(&[0.5, 0.5]);
        let want = (0.75 * 0.5 + 0.25 * 0.5)
            / ((0.75f64 * 0.75 + 0.25 * 0.25).sqrt() * (0.5f64 * 0.5 + 0.5 * 0.5).sqrt());
        let got = cosine_similarity(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.8944).abs() < 1e-4);
    }
}
