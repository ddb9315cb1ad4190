//! Performance-based scoring and weighting of experts.
//!
//! Experts are scored on calibration items with known realizations. The
//! calibration score is the chi-square tail probability of the relative
//! entropy between the empirical inter-quantile hit rates and the nominal
//! `(0.05, 0.45, 0.45, 0.05)`; the information score is the relative entropy
//! of the expert's piecewise-uniform distribution against the uniform
//! background on each item's intrinsic range, averaged over items. Weights are
//! `calibration * information`, zeroed below a cutoff, and pooled globally
//! (one weight per expert for every item).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elicitation::{ElicitedQuantiles, IntrinsicRange, PiecewiseDistribution, PIECE_MASSES};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};
use crate::special::chi_square_sf;

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationItem<T> {
    id: String,
    realization: T,
    judgements: BTreeMap<String, ElicitedQuantiles<T>>,
}

impl<T: Scalar> CalibrationItem<T> {
    pub fn new(
        id: impl Into<String>,
        realization: T,
        judgements: BTreeMap<String, ElicitedQuantiles<T>>,
    ) -> Result<Self> {
        let id = id.into();
        if !realization.is_finite() {
            return Err(Error::Invalid(format!("calibration item {id}: realization is not finite")));
        }
        if judgements.is_empty() {
            return Err(Error::Invalid(format!("calibration item {id}: no expert judgements")));
        }
        Ok(Self { id, realization, judgements })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn realization(&self) -> T {
        self.realization
    }

    pub fn judgements(&self) -> &BTreeMap<String, ElicitedQuantiles<T>> {
        &self.judgements
    }

    pub fn judgement(&self, expert: &str) -> Result<&ElicitedQuantiles<T>> {
        self.judgements
            .get(expert)
            .ok_or_else(|| Error::MissingJudgement { expert: expert.to_string(), item: self.id.clone() })
    }

    /// Range pooled over every judgement and the realization.
    pub fn range(&self, overshoot: T) -> Result<IntrinsicRange<T>> {
        let values = self.judgements.values().flat_map(|q| q.as_array()).chain(std::iter::once(self.realization));
        IntrinsicRange::from_values(values, overshoot)
    }
}

/// Index of the inter-quantile bin `x` falls in. Values on a quantile go to the upper bin.
pub fn bin_index<T: Scalar>(quantiles: [T; 3], x: T) -> usize {
    quantiles.iter().take_while(|q| x >= **q).count()
}

pub fn bin_counts<T: Scalar>(items: &[CalibrationItem<T>], expert: &str) -> Result<[usize; 4]> {
    let mut counts = [0usize; 4];
    for item in items {
        let q = item.judgement(expert)?;
        counts[bin_index(q.as_array(), item.realization)] += 1;
    }
    Ok(counts)
}

/// Relative entropy of the empirical bin proportions against the nominal masses.
pub fn hit_rate_divergence<T: Scalar>(counts: [usize; 4], n: usize) -> T {
    let n = from_usize::<T>(n);
    counts.iter().zip(PIECE_MASSES).filter(|(c, _)| **c > 0).fold(T::zero(), |acc, (c, p)| {
        let a = from_usize::<T>(*c) / n;
        acc + a * (a / lit(p)).ln()
    })
}

/// `1 - F_chi2(3)(2 N I(s/N; p))`.
pub fn calibration_score<T: Scalar>(counts: [usize; 4], n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("calibration needs at least one item".into()));
    }
    let total: usize = counts.iter().sum();
    if total != n {
        return Err(Error::Domain(format!("bin counts sum to {total}, expected {n}")));
    }
    let divergence = hit_rate_divergence::<T>(counts, n);
    let statistic = lit::<T>(2.0) * from_usize::<T>(n) * divergence.max(T::zero());
    Ok(chi_square_sf(statistic, lit(3.0))?)
}

/// Relative entropy (nats) of `dist` against the uniform background on `range`.
pub fn information_score<T: Scalar>(dist: &PiecewiseDistribution<T>, range: &IntrinsicRange<T>) -> Result<T> {
    if dist.lo() < range.lo() || dist.hi() > range.hi() {
        return Err(Error::Range(format!(
            "distribution support [{}, {}] has mass where the background on [{}, {}] has none",
            dist.lo(),
            dist.hi(),
            range.lo(),
            range.hi()
        )));
    }
    let width = range.width();
    let values = dist.knot_values();
    let mut info = T::zero();
    for (k, mass) in dist.piece_masses().into_iter().enumerate() {
        if mass <= T::zero() {
            continue;
        }
        let background = (values[k + 1] - values[k]) / width;
        if !(background > T::zero()) {
            return Err(Error::Range("inter-quantile interval with zero background mass".into()));
        }
        info = info + mass * (mass / background).ln();
    }
    Ok(info.max(T::zero()))
}

/// Mean information of a set of quantile judgements over their item ranges.
fn mean_information<T: Scalar>(judged: impl Iterator<Item = (ElicitedQuantiles<T>, IntrinsicRange<T>)>) -> Result<T> {
    let mut total = T::zero();
    let mut n = 0usize;
    for (q, range) in judged {
        let d = PiecewiseDistribution::fit(&q, &range)?;
        total = total + information_score(&d, &range)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Domain("information score needs at least one item".into()));
    }
    Ok(total / from_usize(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertScore<T> {
    pub expert: String,
    pub calibration: T,
    pub information: T,
    pub raw_weight: T,
    pub norm_weight: T,
}

/// `raw_e = C_e * I_e * [C_e >= alpha]`, normalized to sum to one.
pub fn compute_weights<T: Scalar>(scores: &[(T, T)], alpha: T) -> Result<Vec<T>> {
    for &(c, i) in scores {
        if !(c >= T::zero() && c <= T::one()) || !(i >= T::zero()) {
            return Err(Error::Domain(format!("invalid score (calibration {c}, information {i})")));
        }
    }
    let raw: Vec<T> = scores.iter().map(|&(c, i)| if c >= alpha { c * i } else { T::zero() }).collect();
    let total = raw.iter().fold(T::zero(), |acc, w| acc + *w);
    if !(total > T::zero()) {
        return Err(Error::AllExcluded { alpha: alpha.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Pointwise mixture `sum_i w_i F_i(x)`, re-expressed on the union of all knots.
pub fn pool_mixture<T: Scalar>(dists: &[&PiecewiseDistribution<T>], weights: &[T]) -> Result<PiecewiseDistribution<T>> {
    if dists.is_empty() || dists.len() != weights.len() {
        return Err(Error::Invalid("mixture needs one weight per distribution".into()));
    }
    if weights.iter().any(|w| !(*w >= T::zero())) {
        return Err(Error::Invalid("mixture weights must be nonnegative".into()));
    }
    let sum = weights.iter().fold(T::zero(), |acc, w| acc + *w);
    if !((sum - T::one()).abs() <= lit(WEIGHT_TOLERANCE)) {
        return Err(Error::Weight { sum: sum.to_f64().unwrap_or(f64::NAN) });
    }
    let active: Vec<(&PiecewiseDistribution<T>, T)> =
        dists.iter().copied().zip(weights.iter().copied()).filter(|(_, w)| *w > T::zero()).collect();
    if let [(only, _)] = active.as_slice() {
        return Ok((*only).clone());
    }
    let mut values: Vec<T> = active.iter().flat_map(|(d, _)| d.knot_values().iter().copied()).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    values.dedup();
    let last = values.len() - 1;
    let mut probs = Vec::with_capacity(values.len());
    let mut prev = T::zero();
    for (k, &x) in values.iter().enumerate() {
        let p = if k == 0 {
            T::zero()
        } else if k == last {
            T::one()
        } else {
            active.iter().fold(T::zero(), |acc, (d, w)| acc + *w * d.cdf(x)).max(prev).min(T::one())
        };
        probs.push(p);
        prev = p;
    }
    PiecewiseDistribution::from_knots(values, probs)
}

/// Panel scores over the calibration set: calibration over all items and
/// information averaged over items.
pub fn score_experts<T: Scalar>(items: &[CalibrationItem<T>], panel: &[String], overshoot: T) -> Result<Vec<(T, T)>> {
    if items.is_empty() {
        return Err(Error::Invalid("scoring needs at least one calibration item".into()));
    }
    let ranges = items.iter().map(|it| it.range(overshoot)).collect::<Result<Vec<_>>>()?;
    panel
        .iter()
        .map(|expert| {
            let counts = bin_counts(items, expert)?;
            let calibration = calibration_score(counts, items.len())?;
            let judged = items
                .iter()
                .zip(&ranges)
                .map(|(it, r)| it.judgement(expert).map(|q| (*q, *r)))
                .collect::<Result<Vec<_>>>()?;
            let information = mean_information(judged.into_iter())?;
            Ok((calibration, information))
        })
        .collect()
}

/// Global-weights decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMaker<T> {
    alpha: T,
    experts: Vec<String>,
    weights: Vec<T>,
}

impl<T: Scalar> DecisionMaker<T> {
    pub fn new(alpha: T, experts: Vec<String>, weights: Vec<T>) -> Result<Self> {
        if experts.len() != weights.len() || experts.is_empty() {
            return Err(Error::Invalid("decision maker needs one weight per expert".into()));
        }
        let sum = weights.iter().fold(T::zero(), |acc, w| acc + *w);
        if !((sum - T::one()).abs() <= lit(WEIGHT_TOLERANCE)) {
            return Err(Error::Weight { sum: sum.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { alpha, experts, weights })
    }

    /// A lone expert carrying all the weight.
    pub fn single(expert: impl Into<String>) -> Self {
        Self { alpha: T::zero(), experts: vec![expert.into()], weights: vec![T::one()] }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn experts(&self) -> &[String] {
        &self.experts
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight_of(&self, expert: &str) -> T {
        self.experts.iter().position(|e| e == expert).map_or(T::zero(), |i| self.weights[i])
    }

    /// Pools the weighted experts' distributions for one item on `range`.
    /// Experts with zero weight need not have judged the item.
    pub fn combine_on(
        &self,
        item: &str,
        judgements: &BTreeMap<String, ElicitedQuantiles<T>>,
        range: &IntrinsicRange<T>,
    ) -> Result<PiecewiseDistribution<T>> {
        let mut dists = Vec::new();
        let mut weights = Vec::new();
        for (expert, &w) in self.experts.iter().zip(&self.weights) {
            if w <= T::zero() {
                continue;
            }
            let q = judgements
                .get(expert)
                .ok_or_else(|| Error::MissingJudgement { expert: expert.clone(), item: item.to_string() })?;
            dists.push(PiecewiseDistribution::fit(q, range)?);
            weights.push(w);
        }
        let refs: Vec<&PiecewiseDistribution<T>> = dists.iter().collect();
        pool_mixture(&refs, &weights)
    }

    /// Pools an item on the range spanned by all its judgements.
    pub fn combine(
        &self,
        item: &str,
        judgements: &BTreeMap<String, ElicitedQuantiles<T>>,
        overshoot: T,
    ) -> Result<(IntrinsicRange<T>, PiecewiseDistribution<T>)> {
        let range = IntrinsicRange::from_values(judgements.values().flat_map(|q| q.as_array()), overshoot)?;
        let dm = self.combine_on(item, judgements, &range)?;
        Ok((range, dm))
    }
}

/// Performance of the decision maker built at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEvaluation<T> {
    pub alpha: T,
    pub calibration: T,
    pub information: T,
    pub combined: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSelection<T> {
    pub decision_maker: DecisionMaker<T>,
    pub scores: Vec<ExpertScore<T>>,
    pub evaluation: CutoffEvaluation<T>,
    /// Every feasible candidate, in ascending cutoff order.
    pub candidates: Vec<CutoffEvaluation<T>>,
}

fn expert_scores<T: Scalar>(panel: &[String], scores: &[(T, T)], alpha: T, weights: &[T]) -> Vec<ExpertScore<T>> {
    panel
        .iter()
        .zip(scores)
        .zip(weights)
        .map(|((expert, &(c, i)), &w)| ExpertScore {
            expert: expert.clone(),
            calibration: c,
            information: i,
            raw_weight: if c >= alpha { c * i } else { T::zero() },
            norm_weight: w,
        })
        .collect()
}

/// Scores the decision maker with the given panel weights as if it were an
/// expert: its 5/50/95 percentiles on every calibration item are bin-counted
/// against the realizations and refitted for the information score.
pub fn evaluate_decision_maker<T: Scalar>(
    items: &[CalibrationItem<T>],
    dm: &DecisionMaker<T>,
    overshoot: T,
) -> Result<CutoffEvaluation<T>> {
    if items.is_empty() {
        return Err(Error::Invalid("scoring needs at least one calibration item".into()));
    }
    let mut counts = [0usize; 4];
    let mut judged = Vec::with_capacity(items.len());
    for item in items {
        let range = item.range(overshoot)?;
        let pooled = dm.combine_on(item.id(), item.judgements(), &range)?;
        let [q05, q50, q95] = pooled.elicitation_quantiles();
        let q = ElicitedQuantiles::new(q05, q50, q95)?;
        counts[bin_index(q.as_array(), item.realization())] += 1;
        judged.push((q, range));
    }
    let calibration = calibration_score(counts, items.len())?;
    let information = mean_information(judged.into_iter())?;
    Ok(CutoffEvaluation { alpha: dm.alpha(), calibration, information, combined: calibration * information })
}

/// Decision maker at a fixed cutoff.
pub fn fixed_cutoff<T: Scalar>(
    items: &[CalibrationItem<T>],
    panel: &[String],
    alpha: T,
    overshoot: T,
) -> Result<CutoffSelection<T>> {
    let scores = score_experts(items, panel, overshoot)?;
    let weights = compute_weights(&scores, alpha)?;
    let dm = DecisionMaker::new(alpha, panel.to_vec(), weights.clone())?;
    let evaluation = evaluate_decision_maker(items, &dm, overshoot)?;
    Ok(CutoffSelection {
        scores: expert_scores(panel, &scores, alpha, &weights),
        decision_maker: dm,
        evaluation,
        candidates: vec![evaluation],
    })
}

/// Candidate cutoffs `{0} ∪ {C_e}`, ascending and deduplicated.
pub fn candidate_cutoffs<T: Scalar>(scores: &[(T, T)]) -> Vec<T> {
    let mut cands: Vec<T> = std::iter::once(T::zero()).chain(scores.iter().map(|s| s.0)).collect();
    cands.sort_by(|a, b| a.partial_cmp(b).expect("finite calibration scores"));
    cands.dedup();
    cands
}

/// Chooses the cutoff whose decision maker has the highest
/// calibration-times-information score on the calibration items. Ties go to the
/// smallest cutoff.
pub fn optimize_cutoff<T: Scalar>(
    items: &[CalibrationItem<T>],
    panel: &[String],
    overshoot: T,
) -> Result<CutoffSelection<T>> {
    if panel.is_empty() {
        return Err(Error::Invalid("expert panel is empty".into()));
    }
    let scores = score_experts(items, panel, overshoot)?;
    let candidates = candidate_cutoffs(&scores);
    let evaluated: Vec<Result<(DecisionMaker<T>, CutoffEvaluation<T>)>> = candidates
        .par_iter()
        .map(|&alpha| {
            let weights = compute_weights(&scores, alpha)?;
            let dm = DecisionMaker::new(alpha, panel.to_vec(), weights)?;
            let eval = evaluate_decision_maker(items, &dm, overshoot)?;
            Ok((dm, eval))
        })
        .collect();

    let mut feasible = Vec::new();
    let mut best: Option<(DecisionMaker<T>, CutoffEvaluation<T>)> = None;
    for outcome in evaluated {
        match outcome {
            Ok((dm, eval)) => {
                feasible.push(eval);
                if best.as_ref().is_none_or(|(_, b)| eval.combined > b.combined) {
                    best = Some((dm, eval));
                }
            }
            Err(Error::AllExcluded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let (dm, evaluation) = best.ok_or(Error::NoFeasibleCutoff)?;
    Ok(CutoffSelection {
        scores: expert_scores(panel, &scores, dm.alpha(), dm.weights()),
        decision_maker: dm,
        evaluation,
        candidates: feasible,
    })
}
