use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bary_cli::config::Overrides;
use bary_cli::{Scenario, ScenarioConfig};
use serde_json::Value;
use tempfile::TempDir;

fn bary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bary")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Header with the execution-only keys removed, plus every later line verbatim.
fn comparable(path: &Path) -> (Value, Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let mut it = text.lines();
    let mut header: Value = serde_json::from_str(it.next().unwrap()).unwrap();
    let cfg = header["config"].as_object_mut().unwrap();
    cfg.remove("out");
    cfg.remove("workers");
    (header, it.map(str::to_string).collect())
}

const SMALL_SWEEP: &[&str] = &[
    "jacobian-sweep", "--m", "3,4", "--degree", "2,3", "--atoms", "64", "--grid", "2",
];

#[test]
fn missing_schema_version_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "c.toml", "seed = 3\n");
    let o = bary(&["lemma-suite", "--config", &cfg, "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema_version"));
}

#[test]
fn unknown_key_and_wrong_scenario_are_config_errors() {
    let d = TempDir::new().unwrap();
    let out = d.path().to_str().unwrap();
    let unknown = write(d.path(), "a.toml", "schema_version = 1\nsede = 3\n");
    assert_eq!(code(&bary(&["lemma-suite", "--config", &unknown, "--out", out])), 3);
    let other = write(d.path(), "b.toml", "schema_version = 1\nscenario = \"busemann-validate\"\n");
    assert_eq!(code(&bary(&["lemma-suite", "--config", &other, "--out", out])), 3);
    assert_eq!(code(&bary(&["spot-check", "--out", out])), 3);
    assert_eq!(code(&bary(&["jacobian-sweep", "--m", "1", "--out", out])), 3);
}

#[test]
fn command_line_overrides_file() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("c.toml");
    fs::write(&path, "schema_version = 1\nseed = 5\natoms = 99\ntrials = 7\n").unwrap();
    let over = Overrides {
        seed: Some(11),
        ..Default::default()
    };
    let c = ScenarioConfig::resolve(Scenario::LemmaSuite, Some(&path), &over).unwrap();
    assert_eq!((c.seed, c.atoms, c.trials), (11, 99, 7));
    assert_eq!(c.degree, ScenarioConfig::defaults(Scenario::LemmaSuite).degree);
}

#[test]
fn outputs_are_deterministic_across_runs_and_workers() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let mut args = SMALL_SWEEP.to_vec();
    let (pa, pb) = (a.path().to_str().unwrap(), b.path().to_str().unwrap());
    let run = |out: &str, workers: &str| {
        let mut v = args.clone();
        v.extend(["--out", out, "--workers", workers]);
        assert_eq!(code(&bary(&v)), 0);
    };
    run(pa, "1");
    run(pb, "3");
    let file = "jacobian-sweep.jsonl";
    assert_eq!(comparable(&a.path().join(file)), comparable(&b.path().join(file)));
    assert_eq!(
        fs::read(a.path().join("jacobian-sweep-summary.csv")).unwrap(),
        fs::read(b.path().join("jacobian-sweep-summary.csv")).unwrap()
    );

    // Same directory, same workers: byte-identical.
    run(pb, "3");
    let before = fs::read(a.path().join(file)).unwrap();
    run(pa, "1");
    assert_eq!(before, fs::read(a.path().join(file)).unwrap());

    args.extend(["--seed", "7"]);
    let c = TempDir::new().unwrap();
    let mut v = args.clone();
    v.extend(["--out", c.path().to_str().unwrap()]);
    assert_eq!(code(&bary(&v)), 0);
    assert_ne!(comparable(&a.path().join(file)).1, comparable(&c.path().join(file)).1);
}

#[test]
fn output_layout() {
    let d = TempDir::new().unwrap();
    let mut v = SMALL_SWEEP.to_vec();
    v.extend(["--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&bary(&v)), 0);
    let ls = lines(&d.path().join("jacobian-sweep.jsonl"));
    assert_eq!(ls[0]["kind"], "header");
    assert_eq!(ls[0]["config"]["schema_version"], 1);
    assert_eq!(ls.last().unwrap()["kind"], "summary");
    assert_eq!(ls.last().unwrap()["passed"], true);
    let rows: Vec<&Value> = ls.iter().filter(|l| l["kind"] == "row").collect();
    // 2 sizes x 2 degrees x 4 spreads x 20 tuples x 2 points.
    assert_eq!(rows.len(), 2 * 2 * 4 * 20 * 2);
    let cells: Vec<(u64, u64)> = rows
        .iter()
        .map(|r| (r["cell"].as_u64().unwrap(), r["point"].as_u64().unwrap()))
        .collect();
    assert!(cells.windows(2).all(|w| w[0] < w[1]));
    let csv = fs::read_to_string(d.path().join("jacobian-sweep-summary.csv")).unwrap();
    assert!(csv.starts_with("m,k,"));
}

#[test]
fn negative_tolerance_makes_lemma_suite_fail() {
    let d = TempDir::new().unwrap();
    let out = d.path().to_str().unwrap();
    let cfg = write(d.path(), "c.toml", "schema_version = 1\ntrials = 50\nlemma_tolerance = -1.0\n");
    let o = bary(&["lemma-suite", "--config", &cfg, "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL interlacing"));
    let ok = write(d.path(), "d.toml", "schema_version = 1\ntrials = 50\n");
    assert_eq!(code(&bary(&["lemma-suite", "--config", &ok, "--out", out])), 0);
}

#[test]
fn combinatorics_and_busemann_pass() {
    let d = TempDir::new().unwrap();
    let out = d.path().to_str().unwrap();
    let o = bary(&["combinatorics-verify", "--m", "3,4,5", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let ls = lines(&d.path().join("combinatorics-verify.jsonl"));
    let ex = ls.iter().find(|l| l["kind"] == "exclusion").unwrap();
    assert_eq!(ex["failing"], serde_json::json!([[2, 2], [3, 3]]));
    let cfg = write(d.path(), "b.toml", "schema_version = 1\ntrials = 20\n");
    assert_eq!(code(&bary(&["busemann-validate", "--config", &cfg, "--out", out])), 0);
}

#[test]
fn spot_check_round_trip_and_tamper() {
    let d = TempDir::new().unwrap();
    let out = d.path().to_str().unwrap();
    let mut v = SMALL_SWEEP.to_vec();
    v.extend(["--out", out]);
    assert_eq!(code(&bary(&v)), 0);
    let src = d.path().join("jacobian-sweep.jsonl");
    let chk = d.path().join("check");
    let o = bary(&["spot-check", "--input", src.to_str().unwrap(), "--out", chk.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let mut ls = lines(&src);
    let i = ls
        .iter()
        .position(|l| l["kind"] == "row" && l["ratio"].as_f64().is_some_and(|r| r > 0.0))
        .unwrap();
    let r = ls[i]["ratio"].as_f64().unwrap();
    ls[i]["ratio"] = (r * 1.5).into();
    let text: String = ls.iter().map(|l| format!("{l}\n")).collect();
    let bad = write(d.path(), "tampered.jsonl", &text);
    let o = bary(&["spot-check", "--input", &bad, "--out", chk.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
