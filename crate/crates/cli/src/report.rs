//! The run report: a structured JSON document and a tabular rendering laid
//! out like the published summary table (categories by scenario, then basket
//! blocks, the scenario mixture and what-if analyses).
//!
//! The tabular form is rendered from the structured form only, so every
//! number it shows is present in the JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sejkit_core::classical::{CutoffEvaluation, ExpertScore};
use sejkit_core::Summary;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::money::Money;

pub const SCHEMA: &str = "sejkit.report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub seed: u64,
    pub samples: usize,
    pub config_hash: String,
    pub overshoot: f64,
    pub cutoff_mode: String,
    pub rank_correlation: f64,
    pub currency: String,
    pub scenario_weights: ScenarioWeights,
    pub scoring: Scoring,
    pub categories: Vec<CategoryRow>,
    pub baselines: Vec<BaselineRow>,
    pub scenarios: Vec<ScenarioBlock>,
    pub mixture: ScenarioBlock,
    pub whatifs: Vec<WhatIfRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeights {
    /// `equal` (default) or `elicited` (read from the scenario weights file).
    pub provenance: String,
    pub weights: Vec<ScenarioWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeight {
    pub scenario: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scoring {
    /// `single_expert`, `optimized` or `fixed`.
    pub method: String,
    pub cutoff: f64,
    pub calibration_items: usize,
    /// Decision-maker weight per expert, in panel order.
    pub weights: Vec<ExpertWeight>,
    /// Scores on the calibration items; empty when there are none.
    pub experts: Vec<ExpertScore<f64>>,
    pub decision_maker: Option<CutoffEvaluation<f64>>,
    /// Every feasible cutoff that was evaluated.
    pub candidates: Vec<CutoffEvaluation<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertWeight {
    pub expert: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemQuantiles {
    pub scenario: String,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub scenarios: Vec<ItemQuantiles>,
    pub mixture: ItemQuantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub basket: String,
    pub baseline_date: String,
    pub start_cost: Money,
    pub projected: bool,
    pub growth_mean_pct: f64,
    pub growth_sd_pct: f64,
    pub mean_cost: Money,
    pub sd_cost: Money,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoneySummary {
    pub mean: Money,
    pub sd: Money,
    pub median: Money,
    pub p05: Money,
    pub p95: Money,
}

impl MoneySummary {
    pub fn from_summary(s: &Summary) -> Result<Self> {
        let m = |x: f64| Money::from_f64(x).ok_or_else(|| CliError::Numerical(format!("non-finite amount {x}")));
        Ok(Self { mean: m(s.mean)?, sd: m(s.sd)?, median: m(s.median)?, p05: m(s.p05)?, p95: m(s.p95)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketRow {
    pub basket: String,
    pub percent: Summary,
    pub change: MoneySummary,
    pub total: MoneySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBlock {
    pub scenario: String,
    pub baskets: Vec<BasketRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfRow {
    /// `conditional_tail` or `pinned`.
    pub kind: String,
    pub scenario: String,
    pub basket: String,
    pub floor: Option<f64>,
    pub pins: BTreeMap<String, f64>,
    pub interpretation: String,
    pub percent: Summary,
    pub change: MoneySummary,
    pub total: MoneySummary,
}

pub fn to_structured(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_structured(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text).map_err(|e| CliError::Parse {
        file: "<report>".into(),
        line: e.line() as u64,
        field: "report".into(),
        message: e.to_string(),
    })?;
    if report.schema != SCHEMA {
        return Err(CliError::Validation(format!("unsupported report schema {}", report.schema)));
    }
    Ok(report)
}

pub fn read_structured(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_structured(&text)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn number(x: f64) -> String {
    let s = format!("{x:.1}");
    let s = s.strip_suffix(".0").unwrap_or(&s).to_string();
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn signed_pct(x: f64) -> String {
    let s = format!("{x:+.1}");
    if s == "-0.0" {
        "+0.0".to_string()
    } else {
        s
    }
}

fn signed_money(currency: &str, m: Money) -> String {
    if m.is_negative() {
        format!("-{currency}{}", m.abs())
    } else {
        format!("+{currency}{m}")
    }
}

pub fn quantile_cell(q: &ItemQuantiles) -> String {
    format!("{} ({}, {})", number(q.q50), number(q.q05), number(q.q95))
}

pub fn percent_cell(s: &Summary) -> String {
    format!(
        "Mean {}% ±{:.1} Median {}% [{}, {}]",
        signed_pct(s.mean),
        s.sd,
        signed_pct(s.median),
        signed_pct(s.p05),
        signed_pct(s.p95)
    )
}

pub fn change_cell(c: &str, s: &MoneySummary) -> String {
    format!(
        "Mean {} ± {c}{} Median {} [{}, {}]",
        signed_money(c, s.mean),
        s.sd,
        signed_money(c, s.median),
        signed_money(c, s.p05),
        signed_money(c, s.p95)
    )
}

pub fn total_cell(c: &str, s: &MoneySummary) -> String {
    format!("Mean {c}{} ± {c}{} Median {c}{} [{c}{}, {c}{}]", s.mean, s.sd, s.median, s.p05, s.p95)
}

fn floor_label(floor: f64) -> String {
    format!("p{}", number(floor * 100.0))
}

pub fn whatif_label(w: &WhatIfRow) -> String {
    match (w.kind.as_str(), w.floor) {
        ("conditional_tail", Some(f)) => {
            format!("Scenario {}, {}: every category above its own {} value", w.scenario, w.basket, floor_label(f))
        }
        _ => {
            let pins: Vec<String> = w.pins.iter().map(|(c, p)| format!("{c} at {}", floor_label(*p))).collect();
            format!("Scenario {}, {}: {} pinned, others sampled", w.scenario, w.basket, pins.join(", "))
        }
    }
}

/// Renders the report as a pipe-delimited table.
pub fn render_table(report: &Report) -> Result<String> {
    if report.scenarios.is_empty() {
        return Err(CliError::Validation("report has no scenarios; refusing to emit an empty table".into()));
    }
    let c = report.currency.as_str();
    let mut out = String::new();
    let ids: Vec<&str> = report.scenarios.iter().map(|s| s.scenario.as_str()).collect();
    let line = |out: &mut String, label: &str, cells: Vec<String>| {
        let _ = writeln!(out, "{label} | {}", cells.join(" | "));
    };

    let _ = writeln!(out, "Category percentage price changes: median (5th, 95th percentile)");
    line(&mut out, "Category", ids.iter().map(|s| s.to_string()).collect());
    for row in &report.categories {
        line(&mut out, &row.category, row.scenarios.iter().map(quantile_cell).collect());
    }
    for (i, b) in report.scenarios[0].baskets.iter().enumerate() {
        line(
            &mut out,
            &format!("Overall % change, {} weights", b.basket),
            report.scenarios.iter().map(|s| percent_cell(&s.baskets[i].percent)).collect(),
        );
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "Basket cost changes ({c})");
    for (i, b) in report.scenarios[0].baskets.iter().enumerate() {
        let base = report.baselines.iter().find(|r| r.basket == b.basket);
        let label = match base {
            Some(r) => format!("{} weekly cost change, baseline {c}{}", b.basket, r.mean_cost),
            None => format!("{} weekly cost change", b.basket),
        };
        line(&mut out, &label, report.scenarios.iter().map(|s| change_cell(c, &s.baskets[i].change)).collect());
    }

    let _ = writeln!(out);
    let weights: Vec<String> =
        report.scenario_weights.weights.iter().map(|w| format!("{} {}", w.scenario, w.weight)).collect();
    let _ = writeln!(out, "Scenario mixture ({} weights: {})", report.scenario_weights.provenance, weights.join(", "));
    for b in &report.mixture.baskets {
        line(&mut out, &format!("Overall % change, {} weights", b.basket), vec![percent_cell(&b.percent)]);
        line(&mut out, &format!("Projected {} weekly cost", b.basket), vec![total_cell(c, &b.total)]);
    }

    if !report.whatifs.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "What-if analyses");
        for w in &report.whatifs {
            out.push_str(&render_whatifs(c, std::slice::from_ref(w)));
        }
    }
    Ok(out)
}

/// Expert scores and decision-maker weights, one row per expert.
pub fn render_scoring(scoring: &Scoring) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Scoring: {} (cutoff {}, {} calibration items)",
        scoring.method, scoring.cutoff, scoring.calibration_items
    );
    let _ = writeln!(out, "Expert | Calibration | Information | Weight");
    for w in &scoring.weights {
        match scoring.experts.iter().find(|e| e.expert == w.expert) {
            Some(e) => {
                let _ = writeln!(out, "{} | {:.6} | {:.6} | {:.6}", w.expert, e.calibration, e.information, w.weight);
            }
            None => {
                let _ = writeln!(out, "{} | - | - | {:.6}", w.expert, w.weight);
            }
        }
    }
    if let Some(dm) = &scoring.decision_maker {
        let _ = writeln!(out, "DM | {:.6} | {:.6} | -", dm.calibration, dm.information);
    }
    out
}

/// Decision-maker quantiles per category, scenarios as columns.
pub fn render_categories(rows: &[CategoryRow]) -> Result<String> {
    let Some(first) = rows.first() else {
        return Err(CliError::Validation("no categories to render".into()));
    };
    let mut out = String::new();
    let mut header: Vec<&str> = first.scenarios.iter().map(|q| q.scenario.as_str()).collect();
    header.push("mixture");
    let _ = writeln!(out, "Category | {}", header.join(" | "));
    for row in rows {
        let mut cells: Vec<String> = row.scenarios.iter().map(quantile_cell).collect();
        cells.push(quantile_cell(&row.mixture));
        let _ = writeln!(out, "{} | {}", row.category, cells.join(" | "));
    }
    Ok(out)
}

/// What-if rows alone.
pub fn render_whatifs(currency: &str, rows: &[WhatIfRow]) -> String {
    let mut out = String::new();
    for w in rows {
        let _ = writeln!(
            out,
            "{} | {} | total {}",
            whatif_label(w),
            change_cell(currency, &w.change),
            total_cell(currency, &w.total)
        );
    }
    out
}
