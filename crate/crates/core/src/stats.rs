//! Empirical summaries of Monte Carlo output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Mean, sample standard deviation, median and 90% central interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub mean: T,
    pub sd: T,
    pub median: T,
    pub p05: T,
    pub p95: T,
}

impl<T: Scalar> Summary<T> {
    /// Summary of a sample. The sample is sorted in place.
    pub fn from_samples(samples: &mut [T]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invalid("cannot summarize an empty sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("sample contains non-finite values".into()));
        }
        let (mean, sd) = mean_sd(samples);
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(Self {
            mean,
            sd,
            median: percentile_sorted(samples, lit(0.5)),
            p05: percentile_sorted(samples, lit(0.05)),
            p95: percentile_sorted(samples, lit(0.95)),
        })
    }

    /// Summary of a point mass.
    pub fn point(x: T) -> Self {
        Self { mean: x, sd: T::zero(), median: x, p05: x, p95: x }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            mean: self.mean * k,
            sd: self.sd * k.abs(),
            median: self.median * k,
            p05: self.p05 * k,
            p95: self.p95 * k,
        }
    }
}

/// Mean and unbiased standard deviation (zero for a single value), summed in order.
pub fn mean_sd<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = from_usize::<T>(xs.len());
    let mean = xs.iter().fold(T::zero(), |acc, x| acc + *x) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss = xs.iter().fold(T::zero(), |acc, x| {
        let d = *x - mean;
        acc + d * d
    });
    (mean, (ss / (n - T::one())).sqrt())
}

/// Linear interpolation between order statistics at `h = (n - 1) p`.
pub fn percentile_sorted<T: Scalar>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = from_usize::<T>(n - 1) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(n - 1);
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_percentiles() {
        let xs = [1.0_f64, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&xs, 0.5), 3.0);
        assert_eq!(percentile_sorted(&xs, 0.0), 1.0);
        assert_eq!(percentile_sorted(&xs, 1.0), 5.0);
        assert!((percentile_sorted(&xs, 0.05) - 1.2).abs() < 1e-12);
        assert!((percentile_sorted(&xs, 0.95) - 4.8).abs() < 1e-12);
        assert_eq!(percentile_sorted(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn single_sample_summary_is_degenerate() {
        let s = Summary::from_samples(&mut [7.0]).unwrap();
        assert_eq!(s, Summary::point(7.0));
        assert!(Summary::<f64>::from_samples(&mut []).is_err());
    }

    #[test]
    fn mean_sd_hand_values() {
        let (m, s) = mean_sd(&[1.0_f64, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(m, 3.0);
        assert!((s * s - 2.5).abs() < 1e-12);
    }
}
