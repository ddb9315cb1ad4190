//! Scenario mixing, baseline projection and Monte Carlo propagation of
//! category price changes through weighted baskets.
//!
//! Every category draws from its own random stream, keyed by the run seed and
//! the category id, and split into fixed-size blocks of samples that are
//! processed in parallel. Block boundaries do not depend on the worker count,
//! and per-sample sums run over categories in sorted-id order, so output is
//! bit-identical for any number of workers and any category ordering.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::classical::{pool_mixture, WEIGHT_TOLERANCE};
use crate::elicitation::PiecewiseDistribution;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::stats::{mean_sd, Summary};

/// Samples per stream block.
pub const BLOCK_SIZE: usize = 1 << 14;

pub const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BasketDefinition<T> {
    name: String,
    categories: Vec<(String, T)>,
    baseline_cost: T,
    baseline_date: String,
}

impl<T: Scalar> BasketDefinition<T> {
    pub fn new(
        name: impl Into<String>,
        categories: Vec<(String, T)>,
        baseline_cost: T,
        baseline_date: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        if categories.is_empty() {
            return Err(Error::Invalid(format!("basket {name} has no categories")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (id, w) in &categories {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("basket {name} lists category {id} twice")));
            }
            if !(w.is_finite() && *w >= T::zero()) {
                return Err(Error::Invalid(format!("basket {name}: weight of {id} must be nonnegative")));
            }
        }
        let sum = categories.iter().fold(T::zero(), |acc, (_, w)| acc + *w);
        if !((sum - T::one()).abs() <= lit(WEIGHT_TOLERANCE)) {
            return Err(Error::Weight { sum: sum.to_f64().unwrap_or(f64::NAN) });
        }
        if !(baseline_cost.is_finite() && baseline_cost > T::zero()) {
            return Err(Error::Invalid(format!("basket {name}: baseline cost must be positive")));
        }
        Ok(Self { name, categories, baseline_cost, baseline_date: baseline_date.into() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[(String, T)] {
        &self.categories
    }

    pub fn baseline_cost(&self) -> T {
        self.baseline_cost
    }

    pub fn baseline_date(&self) -> &str {
        &self.baseline_date
    }

    fn sorted_categories(&self) -> Vec<(&str, T)> {
        let mut cats: Vec<(&str, T)> = self.categories.iter().map(|(c, w)| (c.as_str(), *w)).collect();
        cats.sort_by(|a, b| a.0.cmp(b.0));
        cats
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub id: String,
    pub categories: BTreeMap<String, PiecewiseDistribution<T>>,
}

/// Scenarios covering a common category set, with likelihood weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<T> {
    scenarios: Vec<Scenario<T>>,
    likelihoods: Vec<T>,
}

impl<T: Scalar> ScenarioSet<T> {
    pub fn new(scenarios: Vec<Scenario<T>>, likelihoods: Vec<T>) -> Result<Self> {
        let Some(first) = scenarios.first() else {
            return Err(Error::Invalid("scenario set is empty".into()));
        };
        for s in &scenarios[1..] {
            if !s.categories.keys().eq(first.categories.keys()) {
                return Err(Error::CategoryMismatch(format!(
                    "scenario {} does not cover the same categories as scenario {}",
                    s.id, first.id
                )));
            }
        }
        if likelihoods.len() != scenarios.len() {
            return Err(Error::Invalid("one likelihood weight per scenario required".into()));
        }
        if likelihoods.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::Invalid("scenario likelihoods must be nonnegative".into()));
        }
        let sum = likelihoods.iter().fold(T::zero(), |acc, w| acc + *w);
        if !((sum - T::one()).abs() <= lit(WEIGHT_TOLERANCE)) {
            return Err(Error::Weight { sum: sum.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { scenarios, likelihoods })
    }

    pub fn with_equal_likelihoods(scenarios: Vec<Scenario<T>>) -> Result<Self> {
        let n = scenarios.len().max(1);
        let w = T::one() / lit(n as f64);
        Self::new(scenarios, vec![w; n])
    }

    pub fn scenarios(&self) -> &[Scenario<T>] {
        &self.scenarios
    }

    pub fn likelihoods(&self) -> &[T] {
        &self.likelihoods
    }

    pub fn scenario(&self, id: &str) -> Option<&Scenario<T>> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn category_ids(&self) -> impl Iterator<Item = &str> {
        self.scenarios[0].categories.keys().map(String::as_str)
    }

    /// Likelihood-weighted mixture of every category.
    pub fn mixture(&self) -> Result<BTreeMap<String, PiecewiseDistribution<T>>> {
        self.category_ids().map(|c| mix_scenarios(self, c).map(|d| (c.to_string(), d))).collect()
    }
}

/// Likelihood-weighted mixture of one category's scenario distributions.
pub fn mix_scenarios<T: Scalar>(set: &ScenarioSet<T>, category: &str) -> Result<PiecewiseDistribution<T>> {
    let dists = set
        .scenarios
        .iter()
        .map(|s| {
            s.categories
                .get(category)
                .ok_or_else(|| Error::CategoryMismatch(format!("category {category} missing from scenario {}", s.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    pool_mixture(&dists, &set.likelihoods)
}

/// Yearly July-to-December percent changes of overall food prices.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalHistory<T> {
    observations: Vec<(i32, T)>,
}

impl<T: Scalar> SeasonalHistory<T> {
    pub fn new(observations: Vec<(i32, T)>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::InsufficientHistory(observations.len()));
        }
        if observations.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::Invalid("seasonal history values must be finite".into()));
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[(i32, T)] {
        &self.observations
    }
}

/// Baseline cost as a Gaussian percent change applied to a starting cost.
/// A zero standard deviation is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineProjection<T> {
    start_cost: T,
    growth_mean: T,
    growth_sd: T,
}

/// Fits `Normal(mean, unbiased variance)` to the history and applies it to `cost`.
pub fn project_baseline<T: Scalar>(cost: T, history: &SeasonalHistory<T>) -> Result<BaselineProjection<T>> {
    if !(cost.is_finite() && cost > T::zero()) {
        return Err(Error::Invalid("baseline cost must be positive".into()));
    }
    let changes: Vec<T> = history.observations.iter().map(|(_, v)| *v).collect();
    let (growth_mean, growth_sd) = mean_sd(&changes);
    Ok(BaselineProjection { start_cost: cost, growth_mean, growth_sd })
}

impl<T: Scalar> BaselineProjection<T> {
    /// A baseline known exactly.
    pub fn fixed(cost: T) -> Result<Self> {
        if !(cost.is_finite() && cost > T::zero()) {
            return Err(Error::Invalid("baseline cost must be positive".into()));
        }
        Ok(Self { start_cost: cost, growth_mean: T::zero(), growth_sd: T::zero() })
    }

    pub fn start_cost(&self) -> T {
        self.start_cost
    }

    /// Fitted mean of the percent change.
    pub fn growth_mean(&self) -> T {
        self.growth_mean
    }

    /// Fitted standard deviation of the percent change.
    pub fn growth_sd(&self) -> T {
        self.growth_sd
    }

    pub fn is_point_mass(&self) -> bool {
        self.growth_sd == T::zero()
    }

    pub fn mean_cost(&self) -> T {
        self.start_cost * (T::one() + self.growth_mean / lit(100.0))
    }

    pub fn sd_cost(&self) -> T {
        self.start_cost * self.growth_sd / lit(100.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        if self.is_point_mass() {
            return self.mean_cost();
        }
        let z: f64 = rng.sample(StandardNormal);
        let g = self.growth_mean + self.growth_sd * lit(z);
        self.start_cost * (T::one() + g / lit(100.0))
    }

    /// Same projection applied to a rescaled starting cost.
    pub fn rescaled(&self, k: T) -> Self {
        Self { start_cost: self.start_cost * k, ..*self }
    }
}

/// Rank (Spearman) correlations between categories, joined by a Gaussian copula.
/// Pairs not listed are independent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankCorrelation {
    pairs: BTreeMap<(String, String), f64>,
}

impl RankCorrelation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same rank correlation between every pair of `categories`.
    pub fn exchangeable<S: AsRef<str>>(categories: &[S], rho: f64) -> Result<Self> {
        let mut c = Self::new();
        for (i, a) in categories.iter().enumerate() {
            for b in &categories[i + 1..] {
                c.set(a.as_ref(), b.as_ref(), rho)?;
            }
        }
        Ok(c)
    }

    pub fn set(&mut self, a: &str, b: &str, rho: f64) -> Result<()> {
        if a == b {
            return Err(Error::Invalid(format!("self-correlation of {a} is fixed at 1")));
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rank correlation {rho} outside (-1, 1)")));
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.pairs.insert(key, rho);
        Ok(())
    }

    pub fn get(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.pairs.get(&key).copied().unwrap_or(0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.values().all(|r| *r == 0.0)
    }

    /// Lower Cholesky factor of the normal-scale correlation matrix over
    /// `categories`, with `r = 2 sin(pi rho_s / 6)`.
    fn cholesky(&self, categories: &[&str]) -> Result<Vec<Vec<f64>>> {
        let n = categories.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let rho = self.get(categories[i], categories[j]);
                m[i][j] = if i == j { 1.0 } else { 2.0 * (std::f64::consts::PI * rho / 6.0).sin() };
            }
        }
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let d = m[i][i] - s;
                    if d <= 0.0 {
                        return Err(Error::Domain("rank correlation matrix is not positive definite".into()));
                    }
                    l[i][j] = d.sqrt();
                } else {
                    l[i][j] = (m[i][j] - s) / l[j][j];
                }
            }
        }
        Ok(l)
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub correlation: RankCorrelation,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, workers: 0, correlation: RankCorrelation::new() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_correlation(mut self, correlation: RankCorrelation) -> Self {
        self.correlation = correlation;
        self
    }
}

fn stream_key(seed: u64, tag: &[u8], id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"sejkit-stream-v1");
    h.update(seed.to_le_bytes());
    h.update(tag);
    h.update((id.len() as u64).to_le_bytes());
    h.update(id.as_bytes());
    h.finalize().into()
}

/// Random stream for one category and one block of samples.
pub fn category_stream(seed: u64, category: &str, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(stream_key(seed, b"category", category));
    rng.set_stream(block);
    rng
}

fn baseline_stream(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(stream_key(seed, b"baseline", ""));
    rng.set_stream(block);
    rng
}

/// How a category enters a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CategoryDraw<T> {
    /// Full distribution.
    Full,
    /// Conditioned on exceeding its own quantile at this probability.
    Above(T),
    /// Fixed at this value.
    Fixed(T),
}

/// Raw Monte Carlo output for one basket.
#[derive(Debug, Clone, PartialEq)]
pub struct BasketSamples<T> {
    /// Basket percent change per sample.
    pub percent: Vec<T>,
    /// Currency change per sample.
    pub currency: Vec<T>,
    /// Baseline cost per sample.
    pub baseline: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasketOutcome<T> {
    pub percent: Summary<T>,
    pub currency: Summary<T>,
    /// Baseline plus change.
    pub total: Summary<T>,
    pub samples: usize,
}

impl<T: Scalar> BasketSamples<T> {
    pub fn summarize(mut self) -> Result<BasketOutcome<T>> {
        let samples = self.percent.len();
        let mut total: Vec<T> = self.baseline.iter().zip(&self.currency).map(|(b, c)| *b + *c).collect();
        Ok(BasketOutcome {
            percent: Summary::from_samples(&mut self.percent)?,
            currency: Summary::from_samples(&mut self.currency)?,
            total: Summary::from_samples(&mut total)?,
            samples,
        })
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Draws `mc.samples` basket outcomes under a per-category plan.
pub fn simulate_basket<T: Scalar>(
    basket: &BasketDefinition<T>,
    dists: &BTreeMap<String, PiecewiseDistribution<T>>,
    baseline: &BaselineProjection<T>,
    plan: &BTreeMap<String, CategoryDraw<T>>,
    mc: &MonteCarlo,
) -> Result<BasketSamples<T>> {
    if mc.samples == 0 {
        return Err(Error::Invalid("sample count must be at least 1".into()));
    }
    for id in plan.keys() {
        if !basket.categories.iter().any(|(c, _)| c == id) {
            return Err(Error::UnknownCategory(id.clone()));
        }
    }
    let cats = basket.sorted_categories();
    let mut entries = Vec::with_capacity(cats.len());
    for (id, w) in &cats {
        let dist = dists.get(*id).ok_or_else(|| Error::UnknownCategory((*id).to_string()))?;
        let draw = plan.get(*id).copied().unwrap_or(CategoryDraw::Full);
        let draw = match draw {
            CategoryDraw::Above(f) if !(f >= T::zero() && f < T::one()) => {
                return Err(Error::Domain(format!("tail floor {f} outside [0, 1)")));
            }
            CategoryDraw::Fixed(v) if !v.is_finite() => {
                return Err(Error::Invalid(format!("pinned value for {id} is not finite")));
            }
            d => d,
        };
        entries.push((*id, *w, dist, draw));
    }

    let sampled: Vec<&str> = entries.iter().filter(|e| !matches!(e.3, CategoryDraw::Fixed(_))).map(|e| e.0).collect();
    let cholesky = if mc.correlation.is_identity() { None } else { Some(mc.correlation.cholesky(&sampled)?) };

    let blocks = mc.samples.div_ceil(BLOCK_SIZE);
    // (percent change, baseline cost) per sample of one block
    let run_block = |b: usize| -> (Vec<T>, Vec<T>) {
        let len = BLOCK_SIZE.min(mc.samples - b * BLOCK_SIZE);
        let block = b as u64;
        // uniforms[k][j]: sampled category k, sample j
        let mut uniforms: Vec<Vec<f64>> = sampled
            .iter()
            .map(|id| {
                let mut rng = category_stream(mc.seed, id, block);
                match &cholesky {
                    None => (0..len).map(|_| rng.sample(Open01)).collect(),
                    Some(_) => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
                }
            })
            .collect();
        if let Some(l) = &cholesky {
            let n = sampled.len();
            let mut z = vec![0.0; n];
            for j in 0..len {
                for (zk, u) in z.iter_mut().zip(&uniforms) {
                    *zk = u[j];
                }
                for (row, u) in l.iter().zip(uniforms.iter_mut()) {
                    let correlated: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
                    u[j] = standard_normal_cdf(correlated);
                }
            }
        }
        let mut percent = vec![T::zero(); len];
        let mut k = 0;
        for (_, w, dist, draw) in &entries {
            match *draw {
                CategoryDraw::Fixed(v) => percent.iter_mut().for_each(|p| *p = *p + *w * v),
                CategoryDraw::Full | CategoryDraw::Above(_) => {
                    let floor = match *draw {
                        CategoryDraw::Above(f) => f,
                        _ => T::zero(),
                    };
                    for (p, u) in percent.iter_mut().zip(&uniforms[k]) {
                        let u = floor + (T::one() - floor) * lit::<T>(*u);
                        *p = *p + *w * dist.quantile_unchecked(u);
                    }
                    k += 1;
                }
            }
        }
        let mut rng = baseline_stream(mc.seed, block);
        let costs = (0..len).map(|_| baseline.sample(&mut rng)).collect();
        (percent, costs)
    };

    let results: Vec<(Vec<T>, Vec<T>)> = if mc.workers == 0 {
        (0..blocks).into_par_iter().map(run_block).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..blocks).into_par_iter().map(run_block).collect())
    };
    let mut percent = Vec::with_capacity(mc.samples);
    let mut costs = Vec::with_capacity(mc.samples);
    for (p, c) in results {
        percent.extend(p);
        costs.extend(c);
    }
    let hundred = lit::<T>(100.0);
    let currency = costs.iter().zip(&percent).map(|(b, p)| *b * *p / hundred).collect();
    Ok(BasketSamples { percent, currency, baseline: costs })
}

/// Basket percent and currency change with every category drawn from its full distribution.
pub fn propagate_basket<T: Scalar>(
    basket: &BasketDefinition<T>,
    dists: &BTreeMap<String, PiecewiseDistribution<T>>,
    baseline: &BaselineProjection<T>,
    mc: &MonteCarlo,
) -> Result<BasketOutcome<T>> {
    simulate_basket(basket, dists, baseline, &BTreeMap::new(), mc)?.summarize()
}

/// Every category drawn above its own `floor` quantile.
pub fn conditional_tail<T: Scalar>(
    basket: &BasketDefinition<T>,
    dists: &BTreeMap<String, PiecewiseDistribution<T>>,
    baseline: &BaselineProjection<T>,
    floor: T,
    mc: &MonteCarlo,
) -> Result<BasketOutcome<T>> {
    if !(floor >= T::zero() && floor < T::one()) {
        return Err(Error::Domain(format!("tail floor {floor} outside [0, 1)")));
    }
    let plan = basket.categories.iter().map(|(c, _)| (c.clone(), CategoryDraw::Above(floor))).collect();
    simulate_basket(basket, dists, baseline, &plan, mc)?.summarize()
}

/// Pinned categories fixed at their quantile for the given probability; the
/// rest drawn from their full distributions.
pub fn pinned_whatif<T: Scalar>(
    basket: &BasketDefinition<T>,
    dists: &BTreeMap<String, PiecewiseDistribution<T>>,
    baseline: &BaselineProjection<T>,
    pins: &BTreeMap<String, T>,
    mc: &MonteCarlo,
) -> Result<BasketOutcome<T>> {
    let mut plan = BTreeMap::new();
    for (id, p) in pins {
        if !basket.categories.iter().any(|(c, _)| c == id) {
            return Err(Error::UnknownCategory(id.clone()));
        }
        let dist = dists.get(id).ok_or_else(|| Error::UnknownCategory(id.clone()))?;
        plan.insert(id.clone(), CategoryDraw::Fixed(dist.quantile(*p)?));
    }
    simulate_basket(basket, dists, baseline, &plan, mc)?.summarize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicitation::{ElicitedQuantiles, IntrinsicRange};

    fn fit(a: f64, b: f64, c: f64) -> PiecewiseDistribution<f64> {
        let q = ElicitedQuantiles::new(a, b, c).unwrap();
        PiecewiseDistribution::fit(&q, &IntrinsicRange::for_quantiles(&q, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn baseline_hand_values() {
        let h =
            SeasonalHistory::new(vec![(2015, 1.0_f64), (2016, 2.0), (2017, 3.0), (2018, 4.0), (2019, 5.0)]).unwrap();
        let b = project_baseline(100.0_f64, &h).unwrap();
        assert_eq!(b.growth_mean(), 3.0);
        assert!((b.growth_sd().powi(2) - 2.5).abs() < 1e-12);
        assert!((b.mean_cost() - 103.0).abs() < 1e-12);
        assert!((b.sd_cost() - 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_history_is_point_mass() {
        let h = SeasonalHistory::new(vec![(2018, 0.0), (2019, 0.0)]).unwrap();
        let b = project_baseline(59.35, &h).unwrap();
        assert!(b.is_point_mass());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(b.sample(&mut rng), 59.35);
    }

    #[test]
    fn short_history_rejected() {
        assert!(matches!(SeasonalHistory::new(vec![(2019, 1.0)]), Err(Error::InsufficientHistory(1))));
    }

    #[test]
    fn basket_validation() {
        let ok = vec![("a".to_string(), 0.25), ("b".to_string(), 0.75)];
        assert!(BasketDefinition::new("x", ok.clone(), 10.0, "2020-12").is_ok());
        assert!(matches!(
            BasketDefinition::new("x", vec![("a".to_string(), 0.5)], 10.0, ""),
            Err(Error::Weight { .. })
        ));
        assert!(BasketDefinition::new("x", ok.clone(), 0.0, "").is_err());
        let dup = vec![("a".to_string(), 0.5), ("a".to_string(), 0.5)];
        assert!(BasketDefinition::new("x", dup, 1.0, "").is_err());
    }

    #[test]
    fn scenario_set_validation() {
        let s = |id: &str, cats: &[&str]| Scenario {
            id: id.into(),
            categories: cats.iter().map(|c| (c.to_string(), fit(0.0, 1.0, 2.0))).collect(),
        };
        assert!(matches!(
            ScenarioSet::new(vec![s("A", &["x"]), s("B", &["y"])], vec![0.5, 0.5]),
            Err(Error::CategoryMismatch(_))
        ));
        assert!(matches!(
            ScenarioSet::new(vec![s("A", &["x"]), s("B", &["x"])], vec![0.5, 0.4]),
            Err(Error::Weight { .. })
        ));
        assert!(ScenarioSet::<f64>::with_equal_likelihoods(vec![]).is_err());
        let set = ScenarioSet::new(vec![s("A", &["x"]), s("B", &["x"])], vec![1.0, 0.0]).unwrap();
        assert!(matches!(mix_scenarios(&set, "z"), Err(Error::CategoryMismatch(_))));
    }

    #[test]
    fn fixed_categories_give_deterministic_basket() {
        let basket =
            BasketDefinition::new("b", vec![("x".to_string(), 0.5), ("y".to_string(), 0.5)], 80.0, "").unwrap();
        let dists: BTreeMap<_, _> =
            [("x".to_string(), fit(0.0, 10.0, 20.0)), ("y".to_string(), fit(2.0, 4.0, 9.0))].into_iter().collect();
        let pins = [("x".to_string(), 0.5), ("y".to_string(), 0.5)].into_iter().collect();
        let out =
            pinned_whatif(&basket, &dists, &BaselineProjection::fixed(80.0).unwrap(), &pins, &MonteCarlo::new(100, 1))
                .unwrap();
        assert_eq!(out.percent, Summary::point(7.0));
        assert_eq!(out.currency.median, 5.6);
        assert!(out.currency.sd < 1e-12);
    }

    #[test]
    fn unknown_pin_and_bad_floor_rejected() {
        let basket = BasketDefinition::new("b", vec![("x".to_string(), 1.0)], 1.0, "").unwrap();
        let dists: BTreeMap<_, _> = [("x".to_string(), fit(0.0, 1.0, 2.0))].into_iter().collect();
        let base = BaselineProjection::fixed(1.0).unwrap();
        let mc = MonteCarlo::new(10, 0);
        let pins = [("nope".to_string(), 0.5)].into_iter().collect();
        assert!(matches!(pinned_whatif(&basket, &dists, &base, &pins, &mc), Err(Error::UnknownCategory(_))));
        assert!(matches!(conditional_tail(&basket, &dists, &base, 1.0, &mc), Err(Error::Domain(_))));
        assert!(matches!(conditional_tail(&basket, &dists, &base, -0.1, &mc), Err(Error::Domain(_))));
        assert!(propagate_basket(&basket, &dists, &base, &MonteCarlo::new(0, 0)).is_err());
        assert!(matches!(propagate_basket(&basket, &BTreeMap::new(), &base, &mc), Err(Error::UnknownCategory(_))));
    }

    #[test]
    fn correlation_rejects_non_positive_definite() {
        let cats = ["a", "b", "c"];
        let mut c = RankCorrelation::exchangeable(&cats, 0.9).unwrap();
        c.set("a", "b", -0.9).unwrap();
        assert!(c.cholesky(&cats).is_err());
        assert!(RankCorrelation::exchangeable(&cats, 1.0).is_err());
        assert_eq!(RankCorrelation::exchangeable(&cats, 0.3).unwrap().get("c", "a"), 0.3);
    }
}
