//! Manifest and delimited-text inputs.
//!
//! All tables are UTF-8, comma-delimited, with a header row and `.` as the
//! decimal separator. Parse failures carry the file, line and field.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sejkit_core::{Basket, Quantiles};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub judgements: PathBuf,
    pub calibration: Option<PathBuf>,
    /// When present, basket baseline costs are projected forward with it.
    pub history: Option<PathBuf>,
    pub scenario_weights: Option<PathBuf>,
    #[serde(default = "default_currency")]
    pub currency: String,
    #[serde(rename = "basket", default)]
    pub baskets: Vec<BasketEntry>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub whatif: WhatIfSection,
}

fn default_currency() -> String {
    "£".to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasketEntry {
    pub name: String,
    pub file: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub overshoot: Option<f64>,
    pub cutoff: Option<CutoffSpec>,
    pub scenario_weighting: Option<String>,
    pub workers: Option<usize>,
    pub rank_correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfSection {
    #[serde(default)]
    pub tail: Vec<TailSpec>,
    #[serde(default)]
    pub pinned: Vec<PinSpec>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub scenario: String,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinSpec {
    pub scenario: String,
    pub pins: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| CliError::Parse {
            file: path.display().to_string(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count() as u64),
            field: "manifest".into(),
            message: e.message().to_string(),
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, dir))
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read<R: io::Read>(reader: R, file: &str, expected: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let parse_err =
            |line: u64, message: String| CliError::Parse { file: file.to_string(), line, field: "-".into(), message };
        let headers: Vec<String> =
            rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.iter().map(str::to_string).collect();
        if headers != expected {
            return Err(CliError::Parse {
                file: file.to_string(),
                line: 1,
                field: "header".into(),
                message: format!("expected columns {}, found {}", expected.join(","), headers.join(",")),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { file: file.to_string(), headers, rows })
    }

    fn text<'a>(&self, line: u64, rec: &'a csv::StringRecord, col: usize) -> Result<&'a str> {
        let v = rec.get(col).unwrap_or("");
        if v.is_empty() {
            return Err(self.err(line, col, "empty value".into()));
        }
        Ok(v)
    }

    fn number(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        let raw = self.text(line, rec, col)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(line, col, format!("`{raw}` is not a finite number"))),
        }
    }

    fn err(&self, line: u64, col: usize, message: String) -> CliError {
        CliError::Parse { file: self.file.clone(), line, field: self.headers[col].clone(), message }
    }
}

/// A target item is `category/scenario`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TargetItem {
    pub category: String,
    pub scenario: String,
}

impl TargetItem {
    pub fn parse(item: &str) -> Option<Self> {
        let (category, scenario) = item.rsplit_once('/')?;
        if category.is_empty() || scenario.is_empty() {
            return None;
        }
        Some(Self { category: category.to_string(), scenario: scenario.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    pub expert: String,
    pub item: String,
    pub quantiles: Quantiles,
}

/// Every expert's judgements, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub judgements: Vec<Judgement>,
}

pub const JUDGEMENT_COLUMNS: [&str; 5] = ["expert", "item", "q05", "q50", "q95"];

pub fn parse_judgements<R: io::Read>(reader: R, file: &str) -> Result<Panel> {
    let table = Table::read(reader, file, &JUDGEMENT_COLUMNS)?;
    let mut seen = BTreeSet::new();
    let mut judgements = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let expert = table.text(*line, rec, 0)?.to_string();
        let item = table.text(*line, rec, 1)?.to_string();
        let q05 = table.number(*line, rec, 2)?;
        let q50 = table.number(*line, rec, 3)?;
        let q95 = table.number(*line, rec, 4)?;
        let quantiles = Quantiles::new(q05, q50, q95)
            .map_err(|e| CliError::Validation(format!("{file}:{line}: expert {expert}, item {item}: {e}")))?;
        if !seen.insert((expert.clone(), item.clone())) {
            return Err(CliError::Validation(format!(
                "{file}:{line}: expert {expert} judged item {item} more than once"
            )));
        }
        judgements.push(Judgement { expert, item, quantiles });
    }
    Ok(Panel { judgements })
}

pub fn write_judgements<W: io::Write>(panel: &Panel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| CliError::io("<judgements>", e);
    w.write_record(JUDGEMENT_COLUMNS).map_err(to_io)?;
    for j in &panel.judgements {
        let q = &j.quantiles;
        w.write_record([
            j.expert.clone(),
            j.item.clone(),
            q.q05().to_string(),
            q.q50().to_string(),
            q.q95().to_string(),
        ])
        .map_err(to_io)?;
    }
    w.flush().map_err(|e| CliError::io("<judgements>", e))
}

impl Panel {
    /// Experts in order of first appearance.
    pub fn experts(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.judgements.iter().filter(|j| seen.insert(j.expert.as_str())).map(|j| j.expert.clone()).collect()
    }

    /// Judgements per item, items in order of first appearance.
    pub fn by_item(&self) -> Vec<(String, BTreeMap<String, Quantiles>)> {
        let mut order: Vec<String> = Vec::new();
        let mut map: BTreeMap<String, BTreeMap<String, Quantiles>> = BTreeMap::new();
        for j in &self.judgements {
            let entry = map.entry(j.item.clone()).or_insert_with(|| {
                order.push(j.item.clone());
                BTreeMap::new()
            });
            entry.insert(j.expert.clone(), j.quantiles);
        }
        order
            .into_iter()
            .map(|item| {
                let m = map.remove(&item).unwrap_or_default();
                (item, m)
            })
            .collect()
    }
}

pub fn parse_calibration<R: io::Read>(reader: R, file: &str) -> Result<Vec<(String, f64)>> {
    let table = Table::read(reader, file, &["item", "realization"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, rec) in &table.rows {
        let item = table.text(*line, rec, 0)?.to_string();
        let realization = table.number(*line, rec, 1)?;
        if !seen.insert(item.clone()) {
            return Err(CliError::Validation(format!("{file}:{line}: calibration item {item} listed twice")));
        }
        out.push((item, realization));
    }
    Ok(out)
}

pub fn parse_history<R: io::Read>(reader: R, file: &str) -> Result<Vec<(i32, f64)>> {
    let table = Table::read(reader, file, &["year", "change_pct"])?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let raw = table.text(*line, rec, 0)?;
            let year = raw.parse::<i32>().map_err(|_| table.err(*line, 0, format!("`{raw}` is not a year")))?;
            Ok((year, table.number(*line, rec, 1)?))
        })
        .collect()
}

pub fn parse_scenario_weights<R: io::Read>(reader: R, file: &str) -> Result<Vec<(String, f64)>> {
    let table = Table::read(reader, file, &["scenario", "weight"])?;
    table
        .rows
        .iter()
        .map(|(line, rec)| Ok((table.text(*line, rec, 0)?.to_string(), table.number(*line, rec, 1)?)))
        .collect()
}

/// Basket file rows are `kind,key,value` with kinds `weight` (key = category),
/// `baseline_cost` and `baseline_date`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasketFile {
    pub weights: Vec<(String, f64)>,
    pub baseline_cost: Money,
    pub baseline_date: String,
}

pub fn parse_basket<R: io::Read>(reader: R, file: &str) -> Result<BasketFile> {
    let table = Table::read(reader, file, &["kind", "key", "value"])?;
    let mut weights = Vec::new();
    let mut cost = None;
    let mut date = None;
    for (line, rec) in &table.rows {
        match table.text(*line, rec, 0)? {
            "weight" => {
                let category = table.text(*line, rec, 1)?.to_string();
                let w = table.number(*line, rec, 2)?;
                weights.push((category, w));
            }
            "baseline_cost" => {
                if cost.is_some() {
                    return Err(table.err(*line, 0, "second baseline_cost record".into()));
                }
                let raw = table.text(*line, rec, 2)?;
                let m = Money::parse(raw).map_err(|e| table.err(*line, 2, e))?;
                cost = Some(m);
            }
            "baseline_date" => {
                if date.is_some() {
                    return Err(table.err(*line, 0, "second baseline_date record".into()));
                }
                date = Some(table.text(*line, rec, 2)?.to_string());
            }
            other => return Err(table.err(*line, 0, format!("unknown record kind `{other}`"))),
        }
    }
    let baseline_cost = cost.ok_or_else(|| CliError::Validation(format!("{file}: missing baseline_cost record")))?;
    Ok(BasketFile { weights, baseline_cost, baseline_date: date.unwrap_or_default() })
}

impl BasketFile {
    pub fn to_basket(&self, name: &str) -> Result<Basket> {
        Basket::new(name, self.weights.clone(), self.baseline_cost.to_f64(), self.baseline_date.clone())
            .map_err(|e| CliError::Validation(format!("basket {name}: {e}")))
    }
}
