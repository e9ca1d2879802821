use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oscillab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn two_cell(dir: &Path) {
    fs::write(dir.join("w.csv"), "1,2\n1\n2\n").unwrap();
}

#[test]
fn constant_fixtures() {
    let t = tempfile::tempdir().unwrap();
    two_cell(t.path());
    let o = oscillab(t.path(), &["constant", "--weight", "w.csv", "--kind", "ap", "--p", "2"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["constant"].as_f64().unwrap(), 1.125);
    assert!(v["config_digest"].is_string() && v["version"].is_string());
    let o = oscillab(t.path(), &["constant", "--weight", "w.csv", "--kind", "rh", "--delta", "2"]);
    let rh = json(&o)["constant"].as_f64().unwrap();
    // Root set: sqrt((1 + 4) / 2) / ((1 + 2) / 2).
    assert!((rh - 2.5f64.sqrt() / 1.5).abs() < 1e-9, "{rh}");
}

#[test]
fn constant_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    two_cell(t.path());
    assert_eq!(
        oscillab(t.path(), &["constant", "--weight", "w.csv", "--kind", "ap", "--p", "1"]).status.code(),
        Some(3)
    );
    assert_eq!(oscillab(t.path(), &["constant", "--weight", "w.csv", "--kind", "ap"]).status.code(), Some(2));
    fs::write(t.path().join("bad.csv"), "1,2\n1\nx\n").unwrap();
    assert_eq!(
        oscillab(t.path(), &["constant", "--weight", "bad.csv", "--kind", "ap", "--p", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(oscillab(t.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_single_sufficiency_trial() {
    let t = tempfile::tempdir().unwrap();
    let o = oscillab(t.path(), &["verify", "--suite", "SUFF", "--trials", "1", "--seed", "7", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("out/reports/SUFF/trial-000000.json")).unwrap())
            .unwrap();
    assert_eq!(r["theorem"], "SUFF");
    assert_eq!(r["pass"], true);
    for key in ["k", "bound", "rubio"] {
        assert!(r["metadata"].get(key).is_some(), "{key}");
    }
    let summary = fs::read_to_string(t.path().join("out/summary.csv")).unwrap();
    assert!(summary.starts_with("theorem,trials,failures,"));
    assert!(summary.contains("\nSUFF,1,0,"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(oscillab(t.path(), &["verify", "--suite", "NOPE"]).status.code(), Some(2));
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("run.cfg"), "seed = 3\ntrials = 4\n").unwrap();
    for out in ["a", "b"] {
        let o = oscillab(t.path(), &["--config", "run.cfg", "verify", "--suite", "all", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
    }
    for suite in ["NEC", "LITTLE_BMO", "TL_DYADIC"] {
        for i in 0..4 {
            let rel = format!("reports/{suite}/trial-{i:06}.json");
            assert_eq!(
                fs::read(t.path().join("a").join(&rel)).unwrap(),
                fs::read(t.path().join("b").join(&rel)).unwrap()
            );
        }
    }
    assert_eq!(fs::read(t.path().join("a/summary.csv")).unwrap(), fs::read(t.path().join("b/summary.csv")).unwrap());
}

#[test]
fn sweep_constant_corpus_is_degenerate() {
    let t = tempfile::tempdir().unwrap();
    let o =
        oscillab(t.path(), &["sweep", "--quantity", "c1p", "--grid", "2,4,8", "--corpus", "constant", "--count", "4"]);
    assert_eq!(o.status.code(), Some(4));
    let o = oscillab(t.path(), &["sweep", "--quantity", "c1p", "--grid", "", "--count", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_c1p_is_monotone_and_below_upper_column() {
    let t = tempfile::tempdir().unwrap();
    let o = oscillab(t.path(), &["sweep", "--quantity", "c1p", "--grid", "2,4,8,16", "--count", "12"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let c: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(c.windows(2).all(|w| w[0] <= w[1]), "{c:?}");
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn sweep_jn_decay_stays_below_two_e() {
    let t = tempfile::tempdir().unwrap();
    let o = oscillab(t.path(), &["sweep", "--quantity", "jn-decay", "--grid", "1,64,128", "--count", "6"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert!(f[2].parse::<f64>().unwrap() <= 2.0 * std::f64::consts::E);
        assert_eq!(f[4], "true");
    }
}

#[test]
fn gen_and_norm_roundtrip() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("g.cfg"), "sides = 8x8\n").unwrap();
    let o = oscillab(t.path(), &["--config", "g.cfg", "gen", "corpus", "--count", "2", "--out", "corp"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("corp/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 2);
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("corp/w-0000.json")).unwrap()).unwrap();
    assert!(side["constants"].as_array().unwrap().len() >= 3);
    let o = oscillab(
        t.path(),
        &["--config", "g.cfg", "norm", "--function", "corp/f-0000.csv", "--weight", "corp/w-0000.csv", "--p", "2"],
    );
    assert!(o.status.success());
    assert!(json(&o)["norm"]["value"].as_f64().unwrap() >= 0.0);
    let o = oscillab(
        t.path(),
        &[
            "--config",
            "g.cfg",
            "gen",
            "weight",
            "--spec",
            "{\"kind\":\"checkerboard\",\"contrast\":3}",
            "--out",
            "cb.csv",
        ],
    );
    assert!(o.status.success());
    assert_eq!(json(&o)["provenance"]["kind"], "checkerboard");
}

#[test]
fn bad_thread_count_is_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .current_dir(t.path())
        .env("OSCILLAB_THREADS", "zero")
        .arg("info")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .current_dir(t.path())
        .env("OSCILLAB_THREADS", "2")
        .arg("info")
        .output()
        .unwrap();
    assert_eq!(json(&o)["threads"], 2);
}
