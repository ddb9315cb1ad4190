use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CutoffMode, RunConfig, RunOverrides, ScenarioWeighting};
use crate::error::{CliError, Result};
use crate::inputs::{PinSpec, TailSpec};
use crate::pipeline::{aggregate, load_inputs, run_pipeline, run_whatifs, score, WhatIfs};
use crate::report::{self, render_categories, render_scoring, render_table, render_whatifs};

#[derive(Debug, Parser)]
#[command(name = "sejkit", version, about = "Expert judgement aggregation and basket cost propagation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score experts on the calibration items and print their weights.
    Score(RunArgs),
    /// Decision-maker quantiles per category and scenario.
    Aggregate(RunArgs),
    /// Full basket report.
    Propagate(RunArgs),
    /// Conditional-tail and pinned what-if analyses.
    Whatif(WhatIfArgs),
    /// Re-render a saved structured report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Manifest naming every input file.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Intrinsic-range overshoot fraction.
    #[arg(long)]
    pub overshoot: Option<f64>,
    /// `optimized` or a fixed cutoff in [0, 1].
    #[arg(long)]
    pub cutoff: Option<CutoffMode>,
    /// `equal` or `elicited`.
    #[arg(long = "scenario-weights")]
    pub scenario_weights: Option<ScenarioWeighting>,
    /// Monte Carlo worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Exchangeable rank correlation between categories.
    #[arg(long = "rank-correlation", allow_hyphen_values = true)]
    pub rank_correlation: Option<f64>,
    /// Structured (JSON) output path; stdout when neither output is given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tabular output path.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WhatIfArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Conditional tail, `SCENARIO:FLOOR`. Repeatable.
    #[arg(long)]
    pub tail: Vec<String>,
    /// Pinned category, `CATEGORY=PROBABILITY`. Repeatable.
    #[arg(long)]
    pub pin: Vec<String>,
    /// Scenario the pins apply to.
    #[arg(long = "pin-scenario")]
    pub pin_scenario: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Structured,
    Table,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Structured report written by `propagate`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            samples: self.samples,
            overshoot: self.overshoot,
            cutoff: self.cutoff,
            scenario_weighting: self.scenario_weights,
            workers: self.workers,
            rank_correlation: self.rank_correlation,
        }
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => report::write_file(p, text),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Structured output to `--out`, tabular to `--table`; structured to stdout if neither is given.
fn emit_both(
    out: &mut dyn Write,
    args: &RunArgs,
    structured: impl FnOnce() -> String,
    table: impl FnOnce() -> Result<String>,
) -> Result<()> {
    if let Some(p) = &args.table {
        emit(out, Some(p), &table()?)?;
    }
    if args.out.is_some() || args.table.is_none() {
        emit(out, args.out.as_deref(), &structured())?;
    }
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn parse_tail(s: &str) -> Result<TailSpec> {
    let (scenario, floor) =
        s.rsplit_once(':').ok_or_else(|| CliError::Validation(format!("--tail expects SCENARIO:FLOOR, got `{s}`")))?;
    let floor =
        floor.parse::<f64>().map_err(|_| CliError::Validation(format!("--tail floor `{floor}` is not a number")))?;
    Ok(TailSpec { scenario: scenario.to_string(), floor })
}

fn parse_pins(args: &WhatIfArgs) -> Result<Option<PinSpec>> {
    if args.pin.is_empty() {
        return match args.pin_scenario {
            Some(_) => Err(CliError::Validation("--pin-scenario given without any --pin".into())),
            None => Ok(None),
        };
    }
    let scenario =
        args.pin_scenario.clone().ok_or_else(|| CliError::Validation("--pin needs --pin-scenario".into()))?;
    let mut pins = BTreeMap::new();
    for p in &args.pin {
        let (cat, prob) = p
            .rsplit_once('=')
            .ok_or_else(|| CliError::Validation(format!("--pin expects CATEGORY=PROBABILITY, got `{p}`")))?;
        let prob = prob
            .parse::<f64>()
            .map_err(|_| CliError::Validation(format!("--pin probability `{prob}` is not a number")))?;
        pins.insert(cat.to_string(), prob);
    }
    Ok(Some(PinSpec { scenario, pins }))
}

fn setup(args: &RunArgs) -> Result<(crate::pipeline::Inputs, RunConfig)> {
    let inputs = load_inputs(&args.manifest)?;
    let config = RunConfig::resolve(args.manifest.clone(), &inputs.manifest, &args.overrides())?;
    Ok((inputs, config))
}

/// Runs one command, writing default output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Score(args) => {
            let (inputs, config) = setup(args)?;
            let scored = score(&inputs, &config)?;
            emit_both(out, args, || json(&scored.scoring), || Ok(render_scoring(&scored.scoring)))
        }
        Command::Aggregate(args) => {
            let (inputs, config) = setup(args)?;
            let scored = score(&inputs, &config)?;
            let agg = aggregate(&inputs, &config, &scored.decision_maker)?;
            emit_both(out, args, || json(&agg.rows), || render_categories(&agg.rows))
        }
        Command::Propagate(args) => {
            let (inputs, config) = setup(args)?;
            let requests = WhatIfs::from_manifest(&inputs.manifest);
            let report = run_pipeline(&inputs, &config, &requests)?;
            emit_both(out, args, || report::to_structured(&report), || render_table(&report))
        }
        Command::Whatif(args) => {
            let (inputs, config) = setup(&args.run)?;
            let mut requests = WhatIfs {
                tail: args.tail.iter().map(|t| parse_tail(t)).collect::<Result<_>>()?,
                pinned: parse_pins(args)?.into_iter().collect(),
            };
            if requests.tail.is_empty() && requests.pinned.is_empty() {
                requests = WhatIfs::from_manifest(&inputs.manifest);
            }
            if requests.tail.is_empty() && requests.pinned.is_empty() {
                return Err(CliError::Validation("no what-if requested on the command line or in the manifest".into()));
            }
            let rows = run_whatifs(&inputs, &config, &requests)?;
            let currency = inputs.manifest.currency.clone();
            emit_both(out, &args.run, || json(&rows), || Ok(render_whatifs(&currency, &rows)))
        }
        Command::Report(args) => {
            let report = report::read_structured(&args.input)?;
            let text = match args.format {
                Format::Structured => report::to_structured(&report),
                Format::Table => render_table(&report)?,
            };
            emit(out, args.out.as_deref(), &text)
        }
    }
}
