use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::inputs::{CutoffSpec, Manifest};

pub const DEFAULT_SEED: u64 = 20_200_701;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    Optimized,
    Fixed(f64),
}

impl std::str::FromStr for CutoffMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "optimized" {
            return Ok(CutoffMode::Optimized);
        }
        s.parse::<f64>()
            .map(CutoffMode::Fixed)
            .map_err(|_| format!("cutoff must be `optimized` or a number in [0, 1], got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioWeighting {
    Equal,
    Elicited,
}

impl std::str::FromStr for ScenarioWeighting {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "equal" => Ok(ScenarioWeighting::Equal),
            "elicited" => Ok(ScenarioWeighting::Elicited),
            _ => Err(format!("scenario weighting must be `equal` or `elicited`, got `{s}`")),
        }
    }
}

impl ScenarioWeighting {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioWeighting::Equal => "equal",
            ScenarioWeighting::Elicited => "elicited",
        }
    }
}

/// Command-line values that take precedence over the manifest's `[run]` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub overshoot: Option<f64>,
    pub cutoff: Option<CutoffMode>,
    pub scenario_weighting: Option<ScenarioWeighting>,
    pub workers: Option<usize>,
    pub rank_correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub seed: u64,
    pub samples: usize,
    pub overshoot: f64,
    pub cutoff: CutoffMode,
    pub scenario_weighting: ScenarioWeighting,
    /// Monte Carlo worker threads (0 = all cores). Does not affect output.
    pub workers: usize,
    /// Exchangeable rank correlation between categories (0 = independent).
    pub rank_correlation: f64,
}

impl RunConfig {
    pub fn resolve(manifest_path: PathBuf, manifest: &Manifest, overrides: &RunOverrides) -> Result<Self> {
        let run = &manifest.run;
        let cutoff = match overrides.cutoff {
            Some(c) => c,
            None => match &run.cutoff {
                None => CutoffMode::Optimized,
                Some(CutoffSpec::Fixed(a)) => CutoffMode::Fixed(*a),
                Some(CutoffSpec::Named(s)) => s.parse().map_err(CliError::Validation)?,
            },
        };
        let scenario_weighting = match overrides.scenario_weighting {
            Some(w) => w,
            None => match &run.scenario_weighting {
                Some(s) => s.parse().map_err(CliError::Validation)?,
                None if manifest.scenario_weights.is_some() => ScenarioWeighting::Elicited,
                None => ScenarioWeighting::Equal,
            },
        };
        let config = RunConfig {
            manifest: manifest_path,
            seed: overrides.seed.or(run.seed).unwrap_or(DEFAULT_SEED),
            samples: overrides.samples.or(run.samples).unwrap_or(sejkit_core::propagation::DEFAULT_SAMPLES),
            overshoot: overrides.overshoot.or(run.overshoot).unwrap_or(sejkit_core::elicitation::DEFAULT_OVERSHOOT),
            cutoff,
            scenario_weighting,
            workers: overrides.workers.or(run.workers).unwrap_or(0),
            rank_correlation: overrides.rank_correlation.or(run.rank_correlation).unwrap_or(0.0),
        };
        config.validate(manifest)?;
        Ok(config)
    }

    fn validate(&self, manifest: &Manifest) -> Result<()> {
        if self.samples < 1 {
            return Err(CliError::Validation("samples must be at least 1".into()));
        }
        if !(self.overshoot >= 0.0 && self.overshoot.is_finite()) {
            return Err(CliError::Validation(format!("overshoot must be nonnegative, got {}", self.overshoot)));
        }
        if let CutoffMode::Fixed(a) = self.cutoff {
            if !(0.0..=1.0).contains(&a) {
                return Err(CliError::Validation(format!("fixed cutoff must lie in [0, 1], got {a}")));
            }
        }
        if !(self.rank_correlation > -1.0 && self.rank_correlation < 1.0) {
            return Err(CliError::Validation(format!(
                "rank correlation must lie in (-1, 1), got {}",
                self.rank_correlation
            )));
        }
        if self.scenario_weighting == ScenarioWeighting::Elicited && manifest.scenario_weights.is_none() {
            return Err(CliError::Validation("elicited scenario weighting needs a scenario_weights file".into()));
        }
        Ok(())
    }

    /// Digest of everything that determines the report: the settings except
    /// the worker count, and the bytes of every input file.
    pub fn hash(&self, inputs: &[(String, Vec<u8>)], whatifs: &impl Serialize) -> String {
        #[derive(Serialize)]
        struct Hashed<'a, W: Serialize> {
            seed: u64,
            samples: usize,
            overshoot: f64,
            cutoff: CutoffMode,
            scenario_weighting: ScenarioWeighting,
            rank_correlation: f64,
            whatifs: &'a W,
            inputs: Vec<(&'a str, String)>,
        }
        let hashed = Hashed {
            seed: self.seed,
            samples: self.samples,
            overshoot: self.overshoot,
            cutoff: self.cutoff,
            scenario_weighting: self.scenario_weighting,
            rank_correlation: self.rank_correlation,
            whatifs,
            inputs: inputs
                .iter()
                .map(|(role, bytes)| (role.as_str(), format!("{:x}", Sha256::digest(bytes))))
                .collect(),
        };
        let canonical = serde_json::to_vec(&hashed).expect("config serializes");
        format!("{:x}", Sha256::digest(&canonical))
    }
}
