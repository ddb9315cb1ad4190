use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use sejkit::inputs::{parse_judgements, write_judgements, Judgement, Panel};
use sejkit::report::{self, render_table};
use sejkit::CliError;
use sejkit_core::Quantiles;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).join("manifest.toml")
}

fn sejkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sejkit")).args(args).output().expect("binary runs")
}

fn propagate(manifest: &Path, extra: &[&str], out: &Path) -> Output {
    let mut args = vec!["propagate", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    sejkit(&args)
}

fn error_kind(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    let v: serde_json::Value =
        serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not a record: {stderr}"));
    v["error"]["kind"].as_str().unwrap().to_string()
}

/// Copies a fixture directory so that tests can edit files.
fn scratch(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture(name).parent().unwrap().to_path_buf();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

#[test]
fn table_row_for_vegetables() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.txt");
    let out = sejkit(&[
        "propagate",
        "--manifest",
        fixture("table1").to_str().unwrap(),
        "--samples",
        "2000",
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(table).unwrap();
    assert!(text.lines().any(|l| l == "Vegetables | 16 (-8, 51) | 10 (-4, 30) | 5 (-5, 16)"), "{text}");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["table1", "synthetic"] {
        let a = dir.path().join(format!("{name}-a.json"));
        let b = dir.path().join(format!("{name}-b.json"));
        let c = dir.path().join(format!("{name}-c.json"));
        assert!(propagate(&fixture(name), &["--samples", "40000", "--workers", "1"], &a).status.success());
        assert!(propagate(&fixture(name), &["--samples", "40000", "--workers", "5"], &b).status.success());
        assert!(propagate(&fixture(name), &["--samples", "40000"], &c).status.success());
        let a = fs::read(a).unwrap();
        assert_eq!(a, fs::read(b).unwrap());
        assert_eq!(a, fs::read(c).unwrap());
    }
}

#[test]
fn seed_changes_output_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(propagate(&fixture("table1"), &["--samples", "3000", "--seed", "1"], &a).status.success());
    assert!(propagate(&fixture("table1"), &["--samples", "3000", "--seed", "2"], &b).status.success());
    let a = report::read_structured(&a).unwrap();
    let b = report::read_structured(&b).unwrap();
    assert_ne!(a.config_hash, b.config_hash);
    assert_ne!(a.scenarios, b.scenarios);
    assert_eq!(a.categories, b.categories);
}

#[test]
fn single_sample_run_is_degenerate_but_complete() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = propagate(&fixture("synthetic"), &["--samples", "1"], &path);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report::read_structured(&path).unwrap();
    assert_eq!(r.samples, 1);
    for block in r.scenarios.iter().chain(std::iter::once(&r.mixture)) {
        for b in &block.baskets {
            assert_eq!(b.percent.sd, 0.0);
            assert_eq!(b.percent.p05, b.percent.p95);
            assert_eq!(b.percent.median, b.percent.mean);
        }
    }
    assert!(render_table(&r).is_ok());
}

#[test]
fn structured_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    assert!(propagate(&fixture("synthetic"), &["--samples", "5000"], &path).status.success());
    let text = fs::read_to_string(&path).unwrap();
    let r = report::from_structured(&text).unwrap();
    assert_eq!(report::to_structured(&r), text);
    let again = report::from_structured(&report::to_structured(&r)).unwrap();
    assert_eq!(again, r);
    assert_eq!(r.scenario_weights.provenance, "elicited");
    assert_eq!(r.schema, report::SCHEMA);
    assert!(r.whatifs.iter().any(|w| w.kind == "pinned" && w.interpretation.contains("every other category")));
}

#[test]
fn report_subcommand_rerenders_saved_output() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let table = dir.path().join("t.txt");
    let out = sejkit(&[
        "propagate",
        "--manifest",
        fixture("table1").to_str().unwrap(),
        "--samples",
        "3000",
        "--out",
        json.to_str().unwrap(),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rerendered = sejkit(&["report", "--input", json.to_str().unwrap()]);
    assert!(rerendered.status.success());
    assert_eq!(String::from_utf8(rerendered.stdout).unwrap(), fs::read_to_string(table).unwrap());
    let structured = sejkit(&["report", "--input", json.to_str().unwrap(), "--format", "structured"]);
    assert_eq!(structured.stdout, fs::read(&json).unwrap());
}

#[test]
fn empty_scenario_set_is_not_rendered() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    assert!(propagate(&fixture("table1"), &["--samples", "100"], &path).status.success());
    let mut r = report::read_structured(&path).unwrap();
    r.scenarios.clear();
    assert!(matches!(render_table(&r), Err(CliError::Validation(_))));
}

#[test]
fn subcommands_produce_output() {
    let m = fixture("synthetic");
    let m = m.to_str().unwrap();
    let score = sejkit(&["score", "--manifest", m]);
    assert!(score.status.success());
    let v: serde_json::Value = serde_json::from_slice(&score.stdout).unwrap();
    let total: f64 = v["weights"].as_array().unwrap().iter().map(|w| w["weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let pooled = sejkit(&["score", "--manifest", m, "--cutoff", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&pooled.stdout).unwrap();
    assert!(v["weights"].as_array().unwrap().iter().all(|w| w["weight"].as_f64().unwrap() > 0.0));

    let agg = sejkit(&["aggregate", "--manifest", m]);
    let v: serde_json::Value = serde_json::from_slice(&agg.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);

    let w = sejkit(&["whatif", "--manifest", m, "--samples", "500", "--tail", "Low:0.9"]);
    assert!(w.status.success(), "{}", String::from_utf8_lossy(&w.stderr));
    let v: serde_json::Value = serde_json::from_slice(&w.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["floor"].as_f64(), Some(0.9));

    let w = sejkit(&["whatif", "--manifest", m, "--samples", "500", "--pin", "Bread=0.2", "--pin-scenario", "High"]);
    assert!(w.status.success());
}

#[test]
fn exit_codes() {
    let missing = sejkit(&["propagate", "--manifest", "/nonexistent/manifest.toml"]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_kind(&missing), "io");

    let dir = scratch("table1");
    let manifest = dir.path().join("manifest.toml");
    let m = manifest.to_str().unwrap();
    let judgements = dir.path().join("judgements.csv");
    let original = fs::read_to_string(&judgements).unwrap();

    fs::write(&judgements, original.replace("E1,Vegetables/A,-8,16,51", "E1,Vegetables/A,-8,-8,51")).unwrap();
    let tied = sejkit(&["propagate", "--manifest", m, "--samples", "10"]);
    assert_eq!(tied.status.code(), Some(2));
    assert_eq!(error_kind(&tied), "validation");
    let stderr = String::from_utf8_lossy(&tied.stderr);
    assert!(stderr.contains("E1") && stderr.contains("Vegetables/A"), "{stderr}");

    fs::write(&judgements, original.replace("E1,Vegetables/A,-8,16,51", "E1,Vegetables/A,-8,abc,51")).unwrap();
    let parse = sejkit(&["propagate", "--manifest", m, "--samples", "10"]);
    assert_eq!(parse.status.code(), Some(2));
    assert_eq!(error_kind(&parse), "parse");

    fs::write(&judgements, format!("{original}E2,Fruit/A,1,2,3\n")).unwrap();
    let uncalibrated = sejkit(&["propagate", "--manifest", m, "--samples", "10"]);
    assert_eq!(uncalibrated.status.code(), Some(2));

    fs::write(&judgements, &original).unwrap();
    let bad_samples = sejkit(&["propagate", "--manifest", m, "--samples", "0"]);
    assert_eq!(bad_samples.status.code(), Some(2));
    let bad_cutoff = sejkit(&["propagate", "--manifest", m, "--cutoff", "1.5"]);
    assert_eq!(bad_cutoff.status.code(), Some(2));
    let elicited = sejkit(&["propagate", "--manifest", m, "--scenario-weights", "elicited"]);
    assert_eq!(elicited.status.code(), Some(2));
    let unknown = sejkit(&["whatif", "--manifest", m, "--samples", "10", "--tail", "Z:0.5"]);
    assert_eq!(unknown.status.code(), Some(2));

    // No expert reaches a cutoff of 1 on the synthetic calibration set.
    let synthetic = fixture("synthetic");
    let excluded = sejkit(&["score", "--manifest", synthetic.to_str().unwrap(), "--cutoff", "1"]);
    assert_eq!(excluded.status.code(), Some(4));
    assert_eq!(error_kind(&excluded), "numerical");
}

#[test]
fn stray_item_is_rejected() {
    let dir = scratch("table1");
    let judgements = dir.path().join("judgements.csv");
    let mut text = fs::read_to_string(&judgements).unwrap();
    text.push_str("E1,orphan,1,2,3\n");
    fs::write(&judgements, text).unwrap();
    let out = sejkit(&["propagate", "--manifest", dir.path().join("manifest.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("orphan"));
}

fn name() -> impl Strategy<Value = String> {
    "[A-Za-z0-9][A-Za-z0-9 ,&./\"-]{0,12}[A-Za-z0-9]"
}

fn judgement() -> impl Strategy<Value = Judgement> {
    (name(), name(), -1e6..1e6f64, 1e-6..1e4f64, 1e-6..1e4f64).prop_map(|(expert, item, lo, d1, d2)| Judgement {
        expert,
        item,
        quantiles: Quantiles::new(lo, lo + d1, lo + d1 + d2).unwrap(),
    })
}

proptest! {
    #[test]
    fn judgements_round_trip(js in prop::collection::vec(judgement(), 1..20)) {
        let mut seen = std::collections::BTreeSet::new();
        let judgements: Vec<Judgement> = js
            .into_iter()
            .filter(|j| seen.insert((j.expert.clone(), j.item.clone())))
            .collect();
        let panel = Panel { judgements };
        let mut buf = Vec::new();
        write_judgements(&panel, &mut buf).unwrap();
        let back = parse_judgements(buf.as_slice(), "mem.csv").unwrap();
        prop_assert_eq!(back, panel);
    }
}
