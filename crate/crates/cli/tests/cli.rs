//! End-to-end checks of the `urank` binary: config validation, exit codes,
//! output layout, and overwrite protection.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_urank"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("urank-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const MODEL: &str = r#"{
    "type": "discrete_bipartite",
    "points": [[0.0], [1.0], [2.0]],
    "probs": [0.5, 0.25, 0.25],
    "etas": [0.2, 0.5, 0.9]
}"#;

fn generate_config() -> String {
    format!(
        r#"{{"subcommand": "generate", "params": {{"model": {MODEL}, "n": 50, "seed": 3}}}}"#
    )
}

#[test]
fn generate_writes_layout_and_respects_force() {
    let dir = tmp_dir("layout");
    let cfg = write_config(&dir, "gen.json", &generate_config());
    let out = dir.join("runs");
    let status = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let sub = out.join("generate");
    let hash_dirs: Vec<_> = std::fs::read_dir(&sub).unwrap().collect();
    assert_eq!(hash_dirs.len(), 1);
    let run_dir = hash_dirs[0].as_ref().unwrap().path();
    for f in ["result.csv", "result.json", "meta.json"] {
        assert!(run_dir.join(f).exists(), "missing {f}");
    }
    let csv = std::fs::read_to_string(run_dir.join("result.csv")).unwrap();
    assert!(csv.starts_with("x1,y\n"));
    assert_eq!(csv.lines().count(), 51);
    // rerun without --force fails with the I/O exit code
    let second = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(second.status.code(), Some(4));
    // with --force it succeeds
    let third = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--force")
        .status()
        .unwrap();
    assert!(third.success());
}

#[test]
fn unknown_keys_and_bad_schema_are_config_errors() {
    let dir = tmp_dir("schema");
    // unknown key inside params
    let cfg = write_config(
        &dir,
        "bad.json",
        &format!(
            r#"{{"subcommand": "generate", "params": {{"model": {MODEL}, "n": 50, "sedd": 3}}}}"#
        ),
    );
    let out = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("runs"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sedd") || msg.contains("unknown"), "{msg}");
    // subcommand mismatch
    let cfg2 = write_config(&dir, "gen.json", &generate_config());
    let out2 = bin()
        .args(["variance", "--config"])
        .arg(&cfg2)
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(2));
    // invalid model parameters (probabilities not normalized)
    let cfg3 = write_config(
        &dir,
        "badmodel.json",
        r#"{"subcommand": "generate", "params": {"model": {
            "type": "discrete_bipartite",
            "points": [[0.0]], "probs": [0.7], "etas": [0.5]
        }, "n": 10}}"#,
    );
    let out3 = bin()
        .args(["generate", "--config"])
        .arg(&cfg3)
        .output()
        .unwrap();
    assert_eq!(out3.status.code(), Some(2));
    // missing config file is an I/O error
    let out4 = bin()
        .args(["generate", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert_eq!(out4.status.code(), Some(4));
}

#[test]
fn rates_optimality_mode_rejects_weak_classes() {
    // The three-atom posterior ordering is not realizable by stumps, so the
    // zero-approximation-error mode must refuse the class.
    let dir = tmp_dir("ratesopt");
    let cfg = write_config(
        &dir,
        "rates.json",
        &format!(
            r#"{{"subcommand": "rates", "params": {{
                "model": {MODEL},
                "class": {{"stump_grid": {{"thresholds": [[0.5, 1.5]]}}}},
                "sample_sizes": [20, 40], "replicates": 2,
                "require_optimal_in_class": true, "seed": 1
            }}}}"#
        ),
    );
    let out = bin()
        .args(["rates", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("runs"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("optimal"), "{msg}");
    // a class containing the posterior ordering passes
    let cfg_ok = write_config(
        &dir,
        "rates_ok.json",
        &format!(
            r#"{{"subcommand": "rates", "params": {{
                "model": {MODEL},
                "class": {{"tables": {{"score_sets": [[0.2, 0.5, 0.9], [0.9, 0.5, 0.2]]}}}},
                "sample_sizes": [20, 40], "replicates": 2,
                "require_optimal_in_class": true, "seed": 1
            }}}}"#
        ),
    );
    let status = bin()
        .args(["rates", "--config"])
        .arg(&cfg_ok)
        .arg("--out")
        .arg(dir.join("runs"))
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn variance_rejects_small_replicate_counts() {
    let dir = tmp_dir("varreps");
    let cfg = write_config(
        &dir,
        "var.json",
        &format!(
            r#"{{"subcommand": "variance", "params": {{
                "model": {MODEL},
                "rule": {{"type": "from_scorer", "scorer": {{"type": "stump", "dim": 0, "threshold": 0.5, "direction": 1}}}},
                "n": 20, "replicates": 50, "seed": 1
            }}}}"#
        ),
    );
    let out = bin()
        .args(["variance", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("runs"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tmp_dir("seedflag");
    let cfg = write_config(&dir, "gen.json", &generate_config());
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let out_c = dir.join("c");
    // config seed 3 vs flag seed 3: identical bytes
    bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_a)
        .status()
        .unwrap();
    bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .args(["--seed", "3", "--out"])
        .arg(&out_b)
        .status()
        .unwrap();
    // flag seed 4: different dataset
    bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .args(["--seed", "4", "--out"])
        .arg(&out_c)
        .status()
        .unwrap();
    let read_result = |root: &Path| {
        let sub = root.join("generate");
        let hash_dir = std::fs::read_dir(&sub).unwrap().next().unwrap().unwrap();
        std::fs::read_to_string(hash_dir.path().join("result.csv")).unwrap()
    };
    let a = read_result(&out_a);
    let b = read_result(&out_b);
    let c = read_result(&out_c);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tmp_dir("traineval");
    let out = dir.join("runs");
    let train_cfg = write_config(
        &dir,
        "train.json",
        &format!(
            r#"{{"subcommand": "train", "params": {{
                "data": {{"model": {MODEL}, "n": 30}},
                "algorithm": {{"boost": {{"rounds": 5, "thresholds": [[0.5, 1.5]], "cost": "exponential"}}}},
                "seed": 9
            }}}}"#
        ),
    );
    let status = bin()
        .args(["train", "--config"])
        .arg(&train_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let train_dir = std::fs::read_dir(out.join("train"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let log = std::fs::read_to_string(train_dir.join("result.csv")).unwrap();
    assert!(log.starts_with("round,cost,dim,threshold,direction,weight"));
    // costs are non-increasing down the log
    let costs: Vec<f64> = log
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(costs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    // evaluate the trained scorer on fresh data
    let eval_cfg = write_config(
        &dir,
        "eval.json",
        &format!(
            r#"{{"subcommand": "eval", "params": {{
                "data": {{"model": {MODEL}, "n": 40}},
                "scorer": {{"file": {:?}}},
                "cost": "exponential",
                "seed": 10
            }}}}"#,
            train_dir.join("result.json")
        ),
    );
    let status = bin()
        .args(["eval", "--config"])
        .arg(&eval_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let eval_dir = std::fs::read_dir(out.join("eval"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let table = std::fs::read_to_string(eval_dir.join("result.csv")).unwrap();
    assert!(table.starts_with("estimator,value"));
    assert!(table.contains("empirical_risk"));
    assert!(table.contains("empirical_cost"));
    // surrogate dominance visible in the report
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("result.json")).unwrap())
            .unwrap();
    let risk = json["empirical_risk"].as_f64().unwrap();
    let cost = json["empirical_cost"].as_f64().unwrap();
    assert!(risk <= cost + 1e-12);
}

#[test]
fn decompose_degenerate_kernel_reports_zero_linear_part() {
    let dir = tmp_dir("decomp");
    let cfg = write_config(
        &dir,
        "dec.json",
        &format!(
            r#"{{"subcommand": "decompose", "params": {{
                "model": {MODEL},
                "kernel": {{"projected_mistake": {{"rule": {{"type": "from_scorer", "scorer": {{"type": "stump", "dim": 0, "threshold": 0.5, "direction": 1}}}}}}}},
                "n": 40, "seed": 6
            }}}}"#
        ),
    );
    let out = dir.join("runs");
    let status = bin()
        .args(["decompose", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run_dir = std::fs::read_dir(out.join("decompose"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("result.json")).unwrap())
            .unwrap();
    // a projected kernel has no linear part and no mean
    assert!(json["t_n"].as_f64().unwrap().abs() < 1e-12);
    assert!(json["mean"].as_f64().unwrap().abs() < 1e-12);
    assert!(json["reconstruction_residual"].as_f64().unwrap() < 1e-12);
    assert!(json["projected_degeneracy_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(json["exact"].as_bool(), Some(true));
    // per-sample h values in the csv are all ~0
    let csv = std::fs::read_to_string(run_dir.join("result.csv")).unwrap();
    assert!(csv.starts_with("i,h\n"));
    for line in csv.lines().skip(1) {
        let h: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(h.abs() < 1e-12);
    }
}

#[test]
fn roc_perfect_scorer_reaches_top_left() {
    let dir = tmp_dir("roc");
    // separable two-atom model: eta 0 and 1, scored by the feature itself
    let cfg = write_config(
        &dir,
        "roc.json",
        r#"{"subcommand": "roc", "params": {
            "data": {"model": {
                "type": "discrete_bipartite",
                "points": [[0.0], [1.0]],
                "probs": [0.5, 0.5],
                "etas": [0.0, 1.0]
            }, "n": 60},
            "scorer": {"type": "linear", "weights": [1.0]},
            "seed": 2
        }}"#,
    );
    let out = dir.join("runs");
    let status = bin()
        .args(["roc", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let roc_dir = std::fs::read_dir(out.join("roc"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let csv = std::fs::read_to_string(roc_dir.join("result.csv")).unwrap();
    assert!(csv.starts_with("fpr,tpr\n"));
    assert!(csv.lines().any(|l| l == "0,1"), "curve misses (0,1): {csv}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(roc_dir.join("result.json")).unwrap())
            .unwrap();
    assert_eq!(json["auc"].as_f64().unwrap(), 1.0);
    assert_eq!(json["empirical_risk"].as_f64().unwrap(), 0.0);
    assert_eq!(json["exact"]["auc"].as_f64().unwrap(), 1.0);
}
