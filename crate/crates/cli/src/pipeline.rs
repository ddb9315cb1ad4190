//! End-to-end orchestration: score, weight, combine per item, mix scenarios,
//! project baselines, propagate baskets and run the what-if analyses.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sejkit_core::classical::{fixed_cutoff, optimize_cutoff, CutoffSelection};
use sejkit_core::propagation::{
    conditional_tail, pinned_whatif, project_baseline, propagate_basket, BasketOutcome, MonteCarlo, RankCorrelation,
    Scenario, ScenarioSet, SeasonalHistory,
};
use sejkit_core::{Baseline, Basket, CalibrationItem, DecisionMaker, Distribution};
use serde::Serialize;

use crate::config::{CutoffMode, RunConfig, ScenarioWeighting};
use crate::error::{CliError, Result};
use crate::inputs::{
    parse_basket, parse_calibration, parse_history, parse_judgements, parse_scenario_weights, read_file, BasketFile,
    Manifest, Panel, PinSpec, TailSpec, TargetItem,
};
use crate::money::Money;
use crate::report::{
    BaselineRow, BasketRow, CategoryRow, ExpertWeight, ItemQuantiles, MoneySummary, Report, ScenarioBlock,
    ScenarioWeight, ScenarioWeights, Scoring, WhatIfRow, SCHEMA,
};

/// Recorded with every pinned what-if.
pub const PINNED_INTERPRETATION: &str = "pinned categories are fixed at their own quantile for the stated \
probability; every other category is sampled from its full distribution";

/// Recorded with every conditional-tail what-if.
pub const TAIL_INTERPRETATION: &str = "every category is sampled from its own distribution conditioned to lie \
above its quantile for the stated probability";

/// Parsed inputs plus the raw bytes of every file, for the config hash.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub manifest: Manifest,
    pub panel: Panel,
    pub calibration: Option<Vec<(String, f64)>>,
    pub history: Option<Vec<(i32, f64)>>,
    pub scenario_weights: Option<Vec<(String, f64)>>,
    pub baskets: Vec<(String, BasketFile)>,
    pub raw: Vec<(String, Vec<u8>)>,
}

fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub fn load_inputs(manifest_path: &Path) -> Result<Inputs> {
    let (manifest, dir) = Manifest::load(manifest_path)?;
    let mut raw = vec![("manifest".to_string(), read_file(manifest_path)?)];
    let mut load = |role: &str, rel: &Path| -> Result<(Vec<u8>, String)> {
        let path = resolve(&dir, rel);
        let bytes = read_file(&path)?;
        raw.push((role.to_string(), bytes.clone()));
        Ok((bytes, path.display().to_string()))
    };

    let (bytes, name) = load("judgements", &manifest.judgements)?;
    let panel = parse_judgements(bytes.as_slice(), &name)?;
    let calibration = match &manifest.calibration {
        Some(p) => {
            let (bytes, name) = load("calibration", p)?;
            Some(parse_calibration(bytes.as_slice(), &name)?)
        }
        None => None,
    };
    let history = match &manifest.history {
        Some(p) => {
            let (bytes, name) = load("history", p)?;
            Some(parse_history(bytes.as_slice(), &name)?)
        }
        None => None,
    };
    let scenario_weights = match &manifest.scenario_weights {
        Some(p) => {
            let (bytes, name) = load("scenario_weights", p)?;
            Some(parse_scenario_weights(bytes.as_slice(), &name)?)
        }
        None => None,
    };
    let mut baskets = Vec::new();
    let mut names = BTreeSet::new();
    for entry in &manifest.baskets {
        if !names.insert(entry.name.clone()) {
            return Err(CliError::Validation(format!("basket {} listed twice", entry.name)));
        }
        let (bytes, name) = load(&format!("basket:{}", entry.name), &entry.file)?;
        baskets.push((entry.name.clone(), parse_basket(bytes.as_slice(), &name)?));
    }
    Ok(Inputs { manifest, panel, calibration, history, scenario_weights, baskets, raw })
}

/// Target judgements split out of the panel: `targets[scenario][category]`,
/// both in first-appearance order.
struct Targets {
    scenarios: Vec<String>,
    categories: Vec<String>,
    items: BTreeMap<(String, String), BTreeMap<String, sejkit_core::Quantiles>>,
}

fn split_items(inputs: &Inputs) -> Result<(Vec<CalibrationItem>, Targets)> {
    let realizations: BTreeMap<&str, f64> =
        inputs.calibration.iter().flatten().map(|(id, r)| (id.as_str(), *r)).collect();
    let by_item = inputs.panel.by_item();
    let mut judged: BTreeMap<&str, &BTreeMap<String, sejkit_core::Quantiles>> = BTreeMap::new();
    let mut targets = Targets { scenarios: Vec::new(), categories: Vec::new(), items: BTreeMap::new() };
    for (item, judgements) in &by_item {
        if realizations.contains_key(item.as_str()) {
            judged.insert(item, judgements);
            continue;
        }
        let Some(t) = TargetItem::parse(item) else {
            return Err(CliError::Validation(format!(
                "item {item} is neither a calibration item nor a category/scenario target"
            )));
        };
        if !targets.scenarios.contains(&t.scenario) {
            targets.scenarios.push(t.scenario.clone());
        }
        if !targets.categories.contains(&t.category) {
            targets.categories.push(t.category.clone());
        }
        targets.items.insert((t.scenario, t.category), judgements.clone());
    }
    let mut calibration = Vec::new();
    for (id, realization) in inputs.calibration.iter().flatten() {
        let judgements = judged
            .get(id.as_str())
            .ok_or_else(|| CliError::Validation(format!("calibration item {id} has no judgements")))?;
        calibration.push(CalibrationItem::new(id.clone(), *realization, (*judgements).clone())?);
    }
    Ok((calibration, targets))
}

/// Outcome of the scoring stage.
#[derive(Debug, Clone)]
pub struct Scored {
    pub decision_maker: DecisionMaker,
    pub scoring: Scoring,
}

pub fn score(inputs: &Inputs, config: &RunConfig) -> Result<Scored> {
    let (items, _) = split_items(inputs)?;
    let experts = inputs.panel.experts();
    if experts.is_empty() {
        return Err(CliError::Validation("judgements file has no rows".into()));
    }
    if items.is_empty() {
        if experts.len() > 1 {
            return Err(CliError::Validation(format!(
                "{} experts but no calibration items; performance weights need calibration data",
                experts.len()
            )));
        }
        let dm = DecisionMaker::single(experts[0].clone());
        let scoring = Scoring {
            method: "single_expert".into(),
            cutoff: 0.0,
            calibration_items: 0,
            weights: vec![ExpertWeight { expert: experts[0].clone(), weight: 1.0 }],
            experts: Vec::new(),
            decision_maker: None,
            candidates: Vec::new(),
        };
        return Ok(Scored { decision_maker: dm, scoring });
    }
    let (method, selection): (&str, CutoffSelection<f64>) = match config.cutoff {
        CutoffMode::Optimized => ("optimized", optimize_cutoff(&items, &experts, config.overshoot)?),
        CutoffMode::Fixed(a) => ("fixed", fixed_cutoff(&items, &experts, a, config.overshoot)?),
    };
    let dm = selection.decision_maker;
    let scoring = Scoring {
        method: method.into(),
        cutoff: dm.alpha(),
        calibration_items: items.len(),
        weights: experts.iter().map(|e| ExpertWeight { expert: e.clone(), weight: dm.weight_of(e) }).collect(),
        experts: selection.scores,
        decision_maker: Some(selection.evaluation),
        candidates: selection.candidates,
    };
    Ok(Scored { decision_maker: dm, scoring })
}

/// Decision-maker distributions per scenario and category.
#[derive(Debug, Clone)]
pub struct Aggregated {
    pub scenario_order: Vec<String>,
    pub category_order: Vec<String>,
    pub set: ScenarioSet<f64>,
    pub provenance: ScenarioWeighting,
    pub mixture: BTreeMap<String, Distribution>,
    pub rows: Vec<CategoryRow>,
}

fn item_quantiles(scenario: &str, d: &Distribution) -> ItemQuantiles {
    let [q05, q50, q95] = d.elicitation_quantiles();
    ItemQuantiles { scenario: scenario.to_string(), q05, q50, q95, mean: d.mean() }
}

pub fn aggregate(inputs: &Inputs, config: &RunConfig, dm: &DecisionMaker) -> Result<Aggregated> {
    let (_, targets) = split_items(inputs)?;
    if targets.scenarios.is_empty() {
        return Err(CliError::Validation("judgements contain no category/scenario target items".into()));
    }
    let mut scenarios = Vec::new();
    for s in &targets.scenarios {
        let mut categories = BTreeMap::new();
        for c in &targets.categories {
            let item = format!("{c}/{s}");
            let judgements = targets
                .items
                .get(&(s.clone(), c.clone()))
                .ok_or_else(|| CliError::Validation(format!("no judgements for target item {item}")))?;
            let (_, dist) = dm.combine(&item, judgements, config.overshoot)?;
            categories.insert(c.clone(), dist);
        }
        scenarios.push(Scenario { id: s.clone(), categories });
    }
    let set = match config.scenario_weighting {
        ScenarioWeighting::Equal => ScenarioSet::with_equal_likelihoods(scenarios)?,
        ScenarioWeighting::Elicited => {
            let given = inputs.scenario_weights.as_deref().unwrap_or_default();
            let mut map = BTreeMap::new();
            for (id, w) in given {
                if !targets.scenarios.contains(id) {
                    return Err(CliError::Validation(format!("scenario weight given for unknown scenario {id}")));
                }
                if map.insert(id.as_str(), *w).is_some() {
                    return Err(CliError::Validation(format!("scenario {id} weighted twice")));
                }
            }
            let weights = targets
                .scenarios
                .iter()
                .map(|s| {
                    map.get(s.as_str())
                        .copied()
                        .ok_or_else(|| CliError::Validation(format!("no likelihood weight for scenario {s}")))
                })
                .collect::<Result<Vec<_>>>()?;
            ScenarioSet::new(scenarios, weights)?
        }
    };
    let mixture = set.mixture()?;
    let rows = targets
        .categories
        .iter()
        .map(|c| CategoryRow {
            category: c.clone(),
            scenarios: set.scenarios().iter().map(|s| item_quantiles(&s.id, &s.categories[c])).collect(),
            mixture: item_quantiles("mixture", &mixture[c]),
        })
        .collect();
    Ok(Aggregated {
        scenario_order: targets.scenarios,
        category_order: targets.categories,
        set,
        provenance: config.scenario_weighting,
        mixture,
        rows,
    })
}

fn monte_carlo(config: &RunConfig, categories: &[String]) -> Result<MonteCarlo> {
    let mut mc = MonteCarlo::new(config.samples, config.seed).with_workers(config.workers);
    if config.rank_correlation != 0.0 {
        mc = mc.with_correlation(RankCorrelation::exchangeable(categories, config.rank_correlation)?);
    }
    Ok(mc)
}

fn basket_categories(basket: &Basket) -> Vec<String> {
    basket.categories().iter().map(|c| c.0.clone()).collect()
}

fn money(x: f64) -> Result<Money> {
    Money::from_f64(x).ok_or_else(|| CliError::Numerical(format!("non-finite amount {x}")))
}

struct PreparedBasket {
    basket: Basket,
    baseline: Baseline,
    row: BaselineRow,
}

fn prepare_baskets(inputs: &Inputs) -> Result<Vec<PreparedBasket>> {
    let history = match &inputs.history {
        Some(h) => Some(SeasonalHistory::new(h.clone())?),
        None => None,
    };
    inputs
        .baskets
        .iter()
        .map(|(name, file)| {
            let basket = file.to_basket(name)?;
            let cost = basket.baseline_cost();
            let baseline = match &history {
                Some(h) => project_baseline(cost, h)?,
                None => Baseline::fixed(cost)?,
            };
            let row = BaselineRow {
                basket: name.clone(),
                baseline_date: file.baseline_date.clone(),
                start_cost: file.baseline_cost,
                projected: history.is_some(),
                growth_mean_pct: baseline.growth_mean(),
                growth_sd_pct: baseline.growth_sd(),
                mean_cost: money(baseline.mean_cost())?,
                sd_cost: money(baseline.sd_cost())?,
            };
            Ok(PreparedBasket { basket, baseline, row })
        })
        .collect()
}

fn check_categories(basket: &Basket, categories: &[String]) -> Result<()> {
    for (c, _) in basket.categories() {
        if !categories.contains(c) {
            return Err(CliError::Validation(format!(
                "basket {} weights category {c}, which has no judgements",
                basket.name()
            )));
        }
    }
    Ok(())
}

fn basket_row(name: &str, outcome: &BasketOutcome<f64>) -> Result<BasketRow> {
    Ok(BasketRow {
        basket: name.to_string(),
        percent: outcome.percent,
        change: MoneySummary::from_summary(&outcome.currency)?,
        total: MoneySummary::from_summary(&outcome.total)?,
    })
}

/// What-if requests from the manifest or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WhatIfs {
    pub tail: Vec<TailSpec>,
    pub pinned: Vec<PinSpec>,
}

impl WhatIfs {
    pub fn from_manifest(m: &Manifest) -> Self {
        Self { tail: m.whatif.tail.clone(), pinned: m.whatif.pinned.clone() }
    }
}

fn whatifs(
    agg: &Aggregated,
    baskets: &[PreparedBasket],
    requests: &WhatIfs,
    config: &RunConfig,
) -> Result<Vec<WhatIfRow>> {
    let scenario = |id: &str| {
        agg.set.scenario(id).ok_or_else(|| CliError::Validation(format!("what-if names unknown scenario {id}")))
    };
    let mut rows = Vec::new();
    for t in &requests.tail {
        let s = scenario(&t.scenario)?;
        for b in baskets {
            let mc = monte_carlo(config, &basket_categories(&b.basket))?;
            let outcome = conditional_tail(&b.basket, &s.categories, &b.baseline, t.floor, &mc)?;
            let row = basket_row(b.basket.name(), &outcome)?;
            rows.push(WhatIfRow {
                kind: "conditional_tail".into(),
                scenario: t.scenario.clone(),
                basket: row.basket,
                floor: Some(t.floor),
                pins: BTreeMap::new(),
                interpretation: TAIL_INTERPRETATION.into(),
                percent: row.percent,
                change: row.change,
                total: row.total,
            });
        }
    }
    for p in &requests.pinned {
        let s = scenario(&p.scenario)?;
        if p.pins.is_empty() {
            return Err(CliError::Validation("pinned what-if without any pinned category".into()));
        }
        let mut applied = false;
        for b in baskets {
            // Baskets that do not weight every pinned category are skipped.
            let cats = basket_categories(&b.basket);
            if !p.pins.keys().all(|c| cats.contains(c)) {
                continue;
            }
            applied = true;
            let mc = monte_carlo(config, &cats)?;
            let outcome = pinned_whatif(&b.basket, &s.categories, &b.baseline, &p.pins, &mc)?;
            let row = basket_row(b.basket.name(), &outcome)?;
            rows.push(WhatIfRow {
                kind: "pinned".into(),
                scenario: p.scenario.clone(),
                basket: row.basket,
                floor: None,
                pins: p.pins.clone(),
                interpretation: PINNED_INTERPRETATION.into(),
                percent: row.percent,
                change: row.change,
                total: row.total,
            });
        }
        if !applied {
            let pins: Vec<&str> = p.pins.keys().map(String::as_str).collect();
            return Err(CliError::Validation(format!(
                "no basket weights all of the pinned categories {}",
                pins.join(", ")
            )));
        }
    }
    Ok(rows)
}

fn prepare(inputs: &Inputs, config: &RunConfig) -> Result<(Scored, Aggregated, Vec<PreparedBasket>)> {
    let scored = score(inputs, config)?;
    let agg = aggregate(inputs, config, &scored.decision_maker)?;
    let baskets = prepare_baskets(inputs)?;
    if baskets.is_empty() {
        return Err(CliError::Validation("manifest names no baskets".into()));
    }
    for b in &baskets {
        check_categories(&b.basket, &agg.category_order)?;
    }
    Ok((scored, agg, baskets))
}

/// Only the requested what-if analyses.
pub fn run_whatifs(inputs: &Inputs, config: &RunConfig, requests: &WhatIfs) -> Result<Vec<WhatIfRow>> {
    let (_, agg, baskets) = prepare(inputs, config)?;
    whatifs(&agg, &baskets, requests, config)
}

/// Runs every stage and assembles the report.
pub fn run_pipeline(inputs: &Inputs, config: &RunConfig, requests: &WhatIfs) -> Result<Report> {
    let (scored, agg, baskets) = prepare(inputs, config)?;

    let mut scenarios = Vec::new();
    for s in agg.set.scenarios() {
        let mut rows = Vec::new();
        for b in &baskets {
            let mc = monte_carlo(config, &basket_categories(&b.basket))?;
            let outcome = propagate_basket(&b.basket, &s.categories, &b.baseline, &mc)?;
            rows.push(basket_row(b.basket.name(), &outcome)?);
        }
        scenarios.push(ScenarioBlock { scenario: s.id.clone(), baskets: rows });
    }
    let mut mixture_rows = Vec::new();
    for b in &baskets {
        let mc = monte_carlo(config, &basket_categories(&b.basket))?;
        let outcome = propagate_basket(&b.basket, &agg.mixture, &b.baseline, &mc)?;
        mixture_rows.push(basket_row(b.basket.name(), &outcome)?);
    }
    let whatif_rows = whatifs(&agg, &baskets, requests, config)?;

    Ok(Report {
        schema: SCHEMA.into(),
        seed: config.seed,
        samples: config.samples,
        config_hash: config.hash(&inputs.raw, requests),
        overshoot: config.overshoot,
        cutoff_mode: match config.cutoff {
            CutoffMode::Optimized => "optimized".into(),
            CutoffMode::Fixed(a) => format!("fixed({a})"),
        },
        rank_correlation: config.rank_correlation,
        currency: inputs.manifest.currency.clone(),
        scenario_weights: ScenarioWeights {
            provenance: agg.provenance.as_str().into(),
            weights: agg
                .scenario_order
                .iter()
                .zip(agg.set.likelihoods())
                .map(|(s, w)| ScenarioWeight { scenario: s.clone(), weight: *w })
                .collect(),
        },
        scoring: scored.scoring,
        categories: agg.rows,
        baselines: baskets.into_iter().map(|b| b.row).collect(),
        scenarios,
        mixture: ScenarioBlock { scenario: "mixture".into(), baskets: mixture_rows },
        whatifs: whatif_rows,
    })
}
