//! Three-quantile judgements and the piecewise-uniform distributions
//! reconstructed from them.

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Probability levels of the elicited quantiles.
pub const QUANTILE_LEVELS: [f64; 3] = [0.05, 0.50, 0.95];

/// Probability mass of the four inter-quantile pieces.
pub const PIECE_MASSES: [f64; 4] = [0.05, 0.45, 0.45, 0.05];

/// Minimum separation between consecutive elicited quantiles.
pub const MIN_SEPARATION: f64 = 1e-9;

pub const DEFAULT_OVERSHOOT: f64 = 0.10;

/// One expert's 5th/50th/95th percentile judgement for one item, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElicitedQuantiles<T> {
    q05: T,
    q50: T,
    q95: T,
}

impl<T: Scalar> ElicitedQuantiles<T> {
    pub fn new(q05: T, q50: T, q95: T) -> Result<Self> {
        let sep = lit::<T>(MIN_SEPARATION);
        let finite = q05.is_finite() && q50.is_finite() && q95.is_finite();
        if !finite || !(q50 - q05 >= sep) || !(q95 - q50 >= sep) {
            return Err(Error::QuantileOrder {
                q05: q05.to_f64().unwrap_or(f64::NAN),
                q50: q50.to_f64().unwrap_or(f64::NAN),
                q95: q95.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { q05, q50, q95 })
    }

    pub fn q05(&self) -> T {
        self.q05
    }

    pub fn q50(&self) -> T {
        self.q50
    }

    pub fn q95(&self) -> T {
        self.q95
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.q05, self.q50, self.q95]
    }
}

/// Support of an item's distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicRange<T> {
    lo: T,
    hi: T,
    overshoot: T,
}

impl<T: Scalar> IntrinsicRange<T> {
    /// An explicit range; `overshoot` is recorded as zero.
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Range(format!("intrinsic range needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, overshoot: T::zero() })
    }

    /// Pools every elicited quantile (and realization, if any) for an item and
    /// extends the extremes by `overshoot` times their spread on both sides.
    pub fn from_values<I>(values: I, overshoot: T) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
    {
        if !(overshoot >= T::zero()) {
            return Err(Error::Range(format!("overshoot must be nonnegative, got {overshoot}")));
        }
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        for v in values {
            if !v.is_finite() {
                return Err(Error::Range(format!("non-finite value {v} in intrinsic range")));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if !(min < max) {
            return Err(Error::Range("intrinsic range needs at least two distinct values".into()));
        }
        let pad = overshoot * (max - min);
        Ok(Self { lo: min - pad, hi: max + pad, overshoot })
    }

    /// Range of a single judgement.
    pub fn for_quantiles(q: &ElicitedQuantiles<T>, overshoot: T) -> Result<Self> {
        Self::from_values(q.as_array(), overshoot)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn overshoot(&self) -> T {
        self.overshoot
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Continuous distribution with a piecewise-linear CDF (piecewise-constant density).
///
/// Knot values are strictly increasing. Knot probabilities run from 0 to 1 and
/// are nondecreasing; a flat stretch is a piece carrying no mass, which only
/// arises from mixtures of distributions with gaps between their supports.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDistribution<T> {
    values: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> PiecewiseDistribution<T> {
    /// Canonical four-piece distribution through `(lo,0), (q05,.05), (q50,.5), (q95,.95), (hi,1)`.
    pub fn fit(q: &ElicitedQuantiles<T>, range: &IntrinsicRange<T>) -> Result<Self> {
        // A quantile on a range bound would leave a zero-width piece carrying 5% of the mass.
        if !(range.lo < q.q05 && q.q95 < range.hi) {
            return Err(Error::Range(format!(
                "quantiles ({}, {}, {}) not strictly inside intrinsic range [{}, {}]",
                q.q05, q.q50, q.q95, range.lo, range.hi
            )));
        }
        Ok(Self {
            values: vec![range.lo, q.q05, q.q50, q.q95, range.hi],
            probs: vec![T::zero(), lit(QUANTILE_LEVELS[0]), lit(QUANTILE_LEVELS[1]), lit(QUANTILE_LEVELS[2]), T::one()],
        })
    }

    /// Builds a distribution from explicit knots.
    pub fn from_knots(values: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if values.len() != probs.len() || values.len() < 2 {
            return Err(Error::Invalid("need at least two (value, probability) knots".into()));
        }
        if values.iter().chain(probs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("knots must be finite".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Invalid("knot values must be strictly increasing".into()));
        }
        if probs.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Invalid("knot probabilities must be nondecreasing".into()));
        }
        if probs[0] != T::zero() || probs[probs.len() - 1] != T::one() {
            return Err(Error::Invalid("knot probabilities must run from 0 to 1".into()));
        }
        Ok(Self { values, probs })
    }

    pub fn knot_values(&self) -> &[T] {
        &self.values
    }

    pub fn knot_probs(&self) -> &[T] {
        &self.probs
    }

    pub fn lo(&self) -> T {
        self.values[0]
    }

    pub fn hi(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Mass carried by each piece between consecutive knots. Fitted
    /// distributions report the canonical masses without rounding.
    pub fn piece_masses(&self) -> Vec<T> {
        let canonical =
            [T::zero(), lit(QUANTILE_LEVELS[0]), lit(QUANTILE_LEVELS[1]), lit(QUANTILE_LEVELS[2]), T::one()];
        if self.probs == canonical {
            return PIECE_MASSES.iter().map(|m| lit(*m)).collect();
        }
        self.probs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn cdf(&self, x: T) -> T {
        if x.is_nan() {
            return x;
        }
        let n = self.values.len();
        if x <= self.values[0] {
            return T::zero();
        }
        if x >= self.values[n - 1] {
            return T::one();
        }
        let i = self.values.partition_point(|v| *v <= x) - 1;
        let (x0, x1) = (self.values[i], self.values[i + 1]);
        let (p0, p1) = (self.probs[i], self.probs[i + 1]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    pub fn density(&self, x: T) -> T {
        let n = self.values.len();
        if !(x >= self.values[0] && x < self.values[n - 1]) {
            return T::zero();
        }
        let i = self.values.partition_point(|v| *v <= x) - 1;
        (self.probs[i + 1] - self.probs[i]) / (self.values[i + 1] - self.values[i])
    }

    /// Smallest `x` with `cdf(x) >= p`.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: T) -> T {
        let n = self.values.len();
        if p <= T::zero() {
            return self.values[0];
        }
        if p >= T::one() {
            return self.values[n - 1];
        }
        let k = self.probs.partition_point(|q| *q < p);
        if self.probs[k] == p {
            return self.values[k];
        }
        let (x0, x1) = (self.values[k - 1], self.values[k]);
        let (p0, p1) = (self.probs[k - 1], self.probs[k]);
        let x = x0 + (x1 - x0) * (p - p0) / (p1 - p0);
        x.min(x1)
    }

    /// Inverse-transform draw with `u` uniform on (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.sample(Open01);
        self.quantile_unchecked(lit(u))
    }

    pub fn mean(&self) -> T {
        let half = lit::<T>(0.5);
        self.values
            .windows(2)
            .zip(self.probs.windows(2))
            .fold(T::zero(), |acc, (v, p)| acc + (p[1] - p[0]) * (v[0] + v[1]) * half)
    }

    pub fn variance(&self) -> T {
        let third = lit::<T>(1.0 / 3.0);
        let second_moment = self
            .values
            .windows(2)
            .zip(self.probs.windows(2))
            .fold(T::zero(), |acc, (v, p)| acc + (p[1] - p[0]) * (v[0] * v[0] + v[0] * v[1] + v[1] * v[1]) * third);
        let m = self.mean();
        (second_moment - m * m).max(T::zero())
    }

    /// The 5th/50th/95th percentiles, e.g. of a pooled decision maker.
    pub fn elicitation_quantiles(&self) -> [T; 3] {
        QUANTILE_LEVELS.map(|p| self.quantile_unchecked(lit(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn veg_a() -> PiecewiseDistribution<f64> {
        let q = ElicitedQuantiles::new(-8.0, 16.0, 51.0).unwrap();
        let r = IntrinsicRange::for_quantiles(&q, DEFAULT_OVERSHOOT).unwrap();
        PiecewiseDistribution::fit(&q, &r).unwrap()
    }

    #[test]
    fn fitted_distribution_hits_elicited_quantiles() {
        let d = veg_a();
        assert_eq!(d.cdf(16.0), 0.5);
        assert_eq!(d.cdf(-8.0), 0.05);
        assert_eq!(d.cdf(51.0), 0.95);
        assert_eq!(d.lo(), -8.0 - 5.9);
        assert_eq!(d.hi(), 51.0 + 5.9);
    }

    #[test]
    fn cdf_boundaries_and_midpoint() {
        let d = veg_a();
        assert_eq!(d.cdf(d.lo()), 0.0);
        assert_eq!(d.cdf(d.hi()), 1.0);
        assert_eq!(d.cdf(-1000.0), 0.0);
        assert_eq!(d.cdf(1000.0), 1.0);
        assert!((d.cdf(4.0) - 0.275).abs() < 1e-15);
    }

    #[test]
    fn quantile_at_knots() {
        let d = veg_a();
        assert_eq!(d.quantile(0.5).unwrap(), 16.0);
        assert_eq!(d.quantile(0.95).unwrap(), 51.0);
        assert_eq!(d.quantile(0.0).unwrap(), d.lo());
        assert_eq!(d.quantile(1.0).unwrap(), d.hi());
        assert!(matches!(d.quantile(1.5), Err(Error::Domain(_))));
        assert!(matches!(d.quantile(-0.1), Err(Error::Domain(_))));
        assert!(matches!(d.quantile(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetric_judgement_has_zero_mean() {
        let q = ElicitedQuantiles::new(-1.0, 0.0, 1.0).unwrap();
        let r = IntrinsicRange::new(-1.2_f64, 1.2).unwrap();
        let d = PiecewiseDistribution::fit(&q, &r).unwrap();
        assert!(d.mean().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_quantiles_and_ranges() {
        assert!(matches!(ElicitedQuantiles::new(1.0, 1.0, 2.0), Err(Error::QuantileOrder { .. })));
        assert!(matches!(ElicitedQuantiles::new(3.0, 2.0, 4.0), Err(Error::QuantileOrder { .. })));
        assert!(matches!(ElicitedQuantiles::new(0.0, 1.0, 1.0 + 1e-12), Err(Error::QuantileOrder { .. })));
        assert!(ElicitedQuantiles::new(f64::NAN, 1.0, 2.0).is_err());
        let q = ElicitedQuantiles::new(-8.0, 16.0, 51.0).unwrap();
        let narrow = IntrinsicRange::new(-5.0, 60.0).unwrap();
        assert!(matches!(PiecewiseDistribution::fit(&q, &narrow), Err(Error::Range(_))));
        assert!(matches!(IntrinsicRange::new(1.0, 1.0), Err(Error::Range(_))));
        assert!(IntrinsicRange::from_values([1.0, 2.0], -0.1).is_err());
    }

    #[test]
    fn piece_masses_are_canonical() {
        let masses = veg_a().piece_masses();
        assert_eq!(masses, vec![0.05, 0.45, 0.45, 0.05]);
    }

    #[test]
    fn narrow_judgement_samples_stay_in_range() {
        let q = ElicitedQuantiles::new(9.999999, 10.0, 10.000001).unwrap();
        let r = IntrinsicRange::for_quantiles(&q, DEFAULT_OVERSHOOT).unwrap();
        let d = PiecewiseDistribution::fit(&q, &r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = d.sample(&mut rng);
            assert!(r.contains(x));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = veg_a();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn flat_piece_quantile_is_left_end() {
        let d = PiecewiseDistribution::from_knots(vec![0.0_f64, 1.0, 2.0, 3.0], vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 1.0);
        assert_eq!(d.cdf(1.5), 0.5);
        assert_eq!(d.density(1.5), 0.0);
        assert!((d.quantile(0.75).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn from_knots_validation() {
        assert!(PiecewiseDistribution::from_knots(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(PiecewiseDistribution::from_knots(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
        assert!(PiecewiseDistribution::from_knots(vec![0.0, 1.0, 2.0], vec![0.0, 0.6, 0.5]).is_err());
        assert!(PiecewiseDistribution::from_knots(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn single_precision_fit() {
        let q = ElicitedQuantiles::<f32>::new(-8.0, 16.0, 51.0).unwrap();
        let r = IntrinsicRange::for_quantiles(&q, 0.1).unwrap();
        let d = PiecewiseDistribution::fit(&q, &r).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 16.0);
        assert!((d.cdf(4.0) - 0.275).abs() < 1e-6);
    }
}
