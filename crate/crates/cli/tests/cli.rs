use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/guardian")
}

fn antnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antnav"))
        .args(args)
        .env_remove("GUARDIAN_API_KEY")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_tsp_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let inst = data("berlin52.tsp");
    let o = antnav(&["solve-tsp", "--in", s(&inst), "--seed", "7", "--iters", "200", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let result = json(&dir.path().join("result.json"));
    assert_eq!(result["seed"], 7);
    assert_eq!(result["best_order"].as_array().unwrap().len(), 52);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 201);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "solve-tsp");
    assert_eq!(manifest["config"]["iterations"], 200);
    assert_eq!(manifest["config"]["ants"], 52);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn solve_tsp_rerun_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let inst = data("eil51.tsp");
    for d in [&a, &b] {
        let o = antnav(&["solve-tsp", "--in", s(&inst), "--seed", "3", "--iters", "50", "--out", s(d.path())]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["result.json", "trace.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn degenerate_flags_match_baseline() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let inst = data("eil51.tsp");
    let common = ["solve-tsp", "--in", s(&inst), "--seed", "11", "--iters", "100"];
    let mut args = common.to_vec();
    args.extend(["--gamma", "0", "--neg-deposit", "0", "--out", s(a.path())]);
    assert!(antnav(&args).status.success());
    let mut args = common.to_vec();
    args.extend(["--baseline", "--out", s(b.path())]);
    assert!(antnav(&args).status.success());
    let ra = json(&a.path().join("result.json"));
    let rb = json(&b.path().join("result.json"));
    assert_eq!(ra["best_order"], rb["best_order"]);
    assert_eq!(rb["config"]["variant"], "acs");
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = TempDir::new().unwrap();
    let o = antnav(&["solve-tsp", "--in", "/nonexistent/x.tsp", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/x.tsp"));
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "iters = 30\nseed = 5\n").unwrap();
    let out = dir.path().join("out");
    let inst = data("eil51.tsp");
    let o = antnav(&["--config", s(&cfg), "solve-tsp", "--in", s(&inst), "--seed", "6", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&out.join("result.json"));
    assert_eq!(r["seed"], 6);
    assert_eq!(r["iterations_run"], 30);

    fs::write(&cfg, "iterz = 30\n").unwrap();
    let o = antnav(&["--config", s(&cfg), "solve-tsp", "--in", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cycle_over_fixture_corpus() {
    let dir = TempDir::new().unwrap();
    let corpus = data("news-fixture.jsonl");
    let o = antnav(&["cycle", "--corpus", s(&corpus), "--iters", "200", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&dir.path().join("cycle.json"));
    let mut ids: Vec<String> = c["ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert_eq!(c["hops"].as_array().unwrap().len(), 20);
    assert!(c["coherence_score"].as_f64().unwrap() >= 0.0);
    ids.sort();
    let expected: Vec<String> = (1..=20).map(|i| format!("g{i:02}")).collect();
    assert_eq!(ids, expected);

    let dot = fs::read_to_string(dir.path().join("cycle.dot")).unwrap();
    assert_eq!(dot.matches(" -- ").count(), 20);
    let html = fs::read_to_string(dir.path().join("cycle.html")).unwrap();
    assert_eq!(html.matches("<li class=\"doc\"").count(), 20);
    assert_eq!(json(&dir.path().join("manifest.json"))["config"]["policy"], "mean");
}

#[test]
fn cycle_window_keeps_nine_documents() {
    let dir = TempDir::new().unwrap();
    let corpus = data("news-fixture.jsonl");
    let o = antnav(&[
        "cycle", "--corpus", s(&corpus), "--from", "2014-03-01", "--to", "2014-03-08", "--iters", "50", "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&dir.path().join("cycle.json"));
    assert_eq!(c["ids"].as_array().unwrap().len(), 9);
}

#[test]
fn cycle_on_two_documents_exits_3() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("two.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"title\":\"A\",\"keywords\":[\"x\"]}\n{\"id\":\"b\",\"title\":\"B\",\"keywords\":[\"y\"]}\n",
    )
    .unwrap();
    let o = antnav(&["cycle", "--corpus", s(&corpus), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn distances_writes_matrix() {
    let dir = TempDir::new().unwrap();
    let corpus = data("news-fixture.jsonl");
    let o = antnav(&["distances", "--corpus", s(&corpus), "--policy", "max", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&dir.path().join("distances.json"));
    assert_eq!(m["ids"].as_array().unwrap().len(), 20);
    let csv = fs::read_to_string(dir.path().join("distances.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn bench_writes_reports() {
    let dir = TempDir::new().unwrap();
    let inst = data("eil51.tsp");
    let o = antnav(&[
        "bench", "--in", s(&inst), "--seeds", "10", "--target-pct", "5", "--iters", "100", "--out", s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp = json(&dir.path().join("comparison.json"));
    assert!((cmp["target"].as_f64().unwrap() - 426.0 * 1.05).abs() < 1e-9);
    assert_eq!(json(&dir.path().join("variant_report.json"))["runs"].as_array().unwrap().len(), 10);
    assert_eq!(json(&dir.path().join("baseline_report.json"))["arm"], "baseline");
    assert!(dir.path().join("traces/eil51-variant-1.csv").exists());
    assert!(dir.path().join("traces/eil51-baseline-10.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn bench_rejects_too_few_seeds() {
    let dir = TempDir::new().unwrap();
    let inst = data("eil51.tsp");
    let o = antnav(&["bench", "--in", s(&inst), "--seeds", "1", "--target", "500", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_catalog_miss_exits_4() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("tiny.tsp");
    fs::write(
        &inst,
        "NAME: tiny\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 0 10\n3 10 10\n4 10 0\nEOF\n",
    )
    .unwrap();
    let o = antnav(&["bench", "--in", s(&inst), "--seeds", "10", "--target", "best-known", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("tiny"));
}

#[test]
fn fetch_without_key_names_env_var() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c.jsonl");
    let o = antnav(&["fetch", "--from", "2014-03-01", "--to", "2014-03-08", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("GUARDIAN_API_KEY"));
}

#[test]
fn fetch_from_fixtures_round_trips_into_cycle() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("fetched.jsonl");
    let fx = fixtures();
    let o = antnav(&[
        "fetch", "--from", "2014-03-01", "--to", "2014-03-08", "--api-key", "test", "--fixture-dir", s(&fx), "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("crimea"));
    let manifest = fs::read_to_string(dir.path().join("fetched.jsonl.manifest.json")).unwrap();
    assert!(!manifest.contains("\"test\""));

    let cyc = dir.path().join("cycle");
    let o = antnav(&["cycle", "--corpus", s(&out), "--iters", "20", "--out", s(&cyc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&cyc.join("cycle.json"))["ids"].as_array().unwrap().len(), 4);
}

#[test]
fn fetch_upstream_failure_exits_5() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("nothing");
    fs::create_dir(&empty).unwrap();
    let o = antnav(&[
        "fetch", "--from", "2014-03-01", "--to", "2014-03-08", "--api-key", "k", "--fixture-dir", s(&empty), "--out",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}
