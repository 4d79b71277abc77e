use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relative improvement of `x` over `baseline`.
pub fn improvement(x: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedImprovement);
    }
    Ok((x - baseline) / baseline)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Means of consecutive non-overlapping blocks of `size`; a trailing partial
/// block is dropped.
pub fn block_means(xs: &[f64], size: usize) -> Vec<f64> {
    assert!(size >= 1, "block size must be positive");
    xs.chunks_exact(size).map(mean).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value before adjustment.
    pub p: f64,
    /// Bonferroni-adjusted p-value, clamped to 1.
    pub p_adjusted: f64,
}

/// Two-sided paired t-test of `a - b`, with the p-value multiplied by
/// `comparisons`.
///
/// Zero-variance differences follow a fixed convention: all-zero
/// differences give `t = 0, p = 1`; a constant non-zero difference gives an
/// infinite `t` and the smallest positive p-value.
pub fn paired_t_test(a: &[f64], b: &[f64], comparisons: usize) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "paired series differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidInput(
            "paired t-test needs at least two pairs".into(),
        ));
    }
    let m = comparisons.max(1) as f64;
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let d_mean = mean(&diffs);
    let var = diffs.iter().map(|d| (d - d_mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    let (t, p) = if var == 0.0 {
        if d_mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(d_mean), f64::MIN_POSITIVE)
        }
    } else {
        let t = d_mean / (var / n).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?;
        (t, (2.0 * dist.sf(t.abs())).clamp(f64::MIN_POSITIVE, 1.0))
    };
    Ok(TTest {
        t,
        df,
        p,
        p_adjusted: (p * m).min(1.0),
    })
}

/// Paired t-test on per-iteration welfare series reduced to means of
/// consecutive iteration pairs.
pub fn welfare_t_test(a: &[f64], b: &[f64], comparisons: usize) -> Result<TTest> {
    paired_t_test(&block_means(a, 2), &block_means(b, 2), comparisons)
}
