use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metacom::synthetic::template_dataset;

fn metacom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metacom")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = metacom(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(dir: &Path, seed: u64, n: usize) -> PathBuf {
    let p = dir.join(format!("comments-{seed}.jsonl"));
    template_dataset(seed, n).save(&p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn stats_writes_manifest_with_input_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 1, 60);
    let out = tmp.path().join("stats");
    let text = ok(&["stats", "--input", s(&input), "--out", s(&out), "--seed", "9"]);
    assert!(text.contains("comments            60"));
    let m = manifest(&out);
    assert_eq!(m["command"], "stats");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["version"].is_string());
    let cfg = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(cfg.contains("seed = 9"));
    assert!(out.join("stats.json").exists());
}

#[test]
fn ingest_normalizes_the_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 2, 30);
    let out = tmp.path().join("ingest");
    ok(&["ingest", "--input", s(&input), "--out", s(&out)]);
    let written = fs::read_to_string(out.join("dataset.jsonl")).unwrap();
    assert_eq!(written.lines().count(), 30);
    assert_eq!(written, fs::read_to_string(&input).unwrap());
}

#[test]
fn classify_emits_one_json_line_per_comment() {
    let tmp = tempfile::tempdir().unwrap();
    let train = fixture(tmp.path(), 3, 200);
    let test = fixture(tmp.path(), 4, 40);
    let model_out = tmp.path().join("train");
    ok(&["train", "--input", s(&train), "--out", s(&model_out)]);
    let out = tmp.path().join("classify");
    let model = model_out.join("model");
    ok(&["classify", "--input", s(&test), "--model", s(&model), "--threshold", "0.8", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("classifications.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 40);
    for l in &lines {
        assert!(l["id"].is_string());
        let meta = l["meta"].as_bool().unwrap();
        let addressees = l["addressees"].as_array().unwrap();
        let confidences = l["confidences"].as_array().unwrap();
        if meta {
            assert_eq!(confidences.len(), 3);
            for c in confidences {
                let p = c[1].as_f64().unwrap();
                let name = c[0].as_str().unwrap();
                assert_eq!(addressees.iter().any(|a| a == name), p > 0.8);
            }
        } else {
            assert!(addressees.is_empty() && confidences.is_empty());
        }
    }
    assert!(lines.iter().any(|l| l["meta"] == true));
    assert_eq!(manifest(&out)["config"]["eval"]["threshold"], 0.8);
}

#[test]
fn training_twice_gives_identical_model_files() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 5, 120);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["train", "--input", s(&input), "--out", s(&a), "--seed", "3"]);
    ok(&["train", "--input", s(&input), "--out", s(&b), "--seed", "3", "--jobs", "2"]);
    let mut names: Vec<_> = fs::read_dir(a.join("model")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        assert_eq!(fs::read(a.join("model").join(&n)).unwrap(), fs::read(b.join("model").join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn rank_features_prints_a_top_ten_table_per_class() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 6, 150);
    let out = tmp.path().join("rank");
    let text = ok(&["rank-features", "--input", s(&input), "--top", "10", "--out", s(&out)]);
    for class in ["Meta", "Media", "Journalist", "Moderator"] {
        assert!(text.lines().any(|l| l == class), "{class} missing");
    }
    let csv = fs::read_to_string(out.join("feature_ranking.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 10);
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((first[0], first[1]), ("Meta", "1"));
}

#[test]
fn two_point_grid_has_two_aggregate_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 7, 90);
    let cfg = tmp.path().join("grid.toml");
    fs::write(
        &cfg,
        "[grid]\nselect = [\"all\"]\nfolds = 3\n[[grid.classifiers]]\nkind = \"linear_svm\"\nc = [0.5, 1.0]\n",
    )
    .unwrap();
    let out = tmp.path().join("grid");
    ok(&["grid-search", "--config", s(&cfg), "--input", s(&input), "--out", s(&out)]);
    let mut reader = csv::Reader::from_path(out.join("grid.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.iter().filter(|r| &r[4] == "mean").count(), 2);
    assert!(out.join("best.json").exists());
}

#[test]
fn evaluate_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 8, 120);
    let out = tmp.path().join("eval");
    let text = ok(&["evaluate", "--input", s(&input), "--folds", "4", "--target", "Meta", "--target", "Media", "--out", s(&out)]);
    assert!(text.contains("F0.5"));
    let cv = fs::read_to_string(out.join("cv.csv")).unwrap();
    assert_eq!(cv.lines().count(), 1 + 2 * (4 + 2));
    let rep = tmp.path().join("report");
    let metrics = out.join("metrics.json");
    let table = ok(&["report", s(&metrics), "--out", s(&rep)]);
    assert!(table.lines().any(|l| l.starts_with("Meta")));
    assert!(table.lines().any(|l| l.starts_with("Media")));
    assert_eq!(fs::read_to_string(rep.join("report.txt")).unwrap(), table);
}

#[test]
fn cross_eval_reports_every_target() {
    let tmp = tempfile::tempdir().unwrap();
    let a = fixture(tmp.path(), 9, 100);
    let b = fixture(tmp.path(), 10, 60);
    let out = tmp.path().join("x");
    ok(&["cross-eval", "--train", s(&a), "--test", s(&b), "--out", s(&out)]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["rows"].as_array().unwrap().len(), 4);
    let n = &m["rows"][0]["metrics"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| n[*k].as_u64().unwrap()).sum();
    assert_eq!(total, 60);
}

#[test]
fn embeddings_neighbors_enrichment_and_sampling() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 11, 150);
    let cfg = tmp.path().join("emb.toml");
    fs::write(&cfg, "[embeddings]\ndim = 16\nmin_count = 2\nepochs = 2\n[sample]\nper_class = 5\nrandom = 10\nenrich_min_sim = 0.0\n").unwrap();
    let emb_out = tmp.path().join("emb");
    ok(&["train-embeddings", "--config", s(&cfg), "--input", s(&input), "--out", s(&emb_out)]);
    let emb = emb_out.join("embeddings");
    assert!(emb.join("words.txt").exists());

    let nb = tmp.path().join("nb");
    ok(&["neighbors", "--embeddings", s(&emb), "--word", "stadt", "--top", "3", "--out", s(&nb)]);
    assert_eq!(fs::read_to_string(nb.join("neighbors.csv")).unwrap().lines().count(), 4);

    let kw = tmp.path().join("kw");
    ok(&["enrich-keywords", "--config", s(&cfg), "--embeddings", s(&emb), "--top-n", "2", "--out", s(&kw)]);
    for slug in ["media", "journalist", "moderator"] {
        assert!(kw.join("keywords").join(format!("{slug}.txt")).exists());
    }

    let sm = tmp.path().join("sample");
    ok(&["sample", "--config", s(&cfg), "--input", s(&input), "--embeddings", s(&emb), "--out", s(&sm)]);
    let batches = fs::read_to_string(sm.join("batches.csv")).unwrap();
    assert!(batches.starts_with("# labels: "));
    assert!(batches.contains("pattern-") && batches.contains(",random,"));
}

#[test]
fn features_writes_matrix_and_names() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 12, 50);
    let out = tmp.path().join("f");
    ok(&["features", "--input", s(&input), "--features", "only-text", "--out", s(&out)]);
    let names = fs::read_to_string(out.join("features.txt.names")).unwrap();
    assert_eq!(names.lines().count(), 6);
    assert!(fs::read_to_string(out.join("features.txt")).unwrap().starts_with("# registry "));
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let missing = metacom(&["stats", "--input", "/nonexistent/file.jsonl", "--out", s(&out)]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let unknown = metacom(&["stats", "--bogus"]);
    assert!(!unknown.status.success());

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "sed = 1\n").unwrap();
    let bad = metacom(&["stats", "--config", s(&cfg), "--input", "x", "--out", s(&out)]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("invalid config"));

    let no_input = metacom(&["stats", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&no_input.stderr).contains("missing --input"));
}
