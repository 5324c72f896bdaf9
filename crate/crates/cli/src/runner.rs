//! Run execution and output layout.
//!
//! Every run writes `<out>/<subcommand>/<config-hash>/{result.csv,
//! result.json, meta.json}`. The result files are a pure function of the
//! effective configuration; wall time and timestamps live only in
//! meta.json, so rerunning an identical configuration reproduces the
//! result files byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use urank::learners::{
    boost_rank, default_budget, empirical_cost, kernel_rank, BoostConfig, IterateChoice,
    KernelConfig, StepRule, StepSize,
};
use urank::risk::{
    auc, risk_auc_identity, roc_curve, true_auc, true_roc, RankKernel, RankingRule,
};
use urank::{Error, Result, RngSeed};

use crate::config::{
    config_hash, BoundsCfg, DecomposeCfg, EvalCfg, GenerateCfg, ParsedConfig, RatesCfg, RocCfg,
    TailExperiment, TrainCfg, TrainSpec, VarianceCfg,
};
use crate::experiments::{run_rates, run_variance};

/// One executed run, ready to be written.
pub struct RunOutput {
    pub subcommand: &'static str,
    pub hash: String,
    pub result_csv: String,
    pub result_json: Value,
    pub effective_params: Value,
}

/// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => 4,
        Error::Numerical(_) | Error::NonFinite(_) => 3,
        _ => 2,
    }
}

pub fn execute(config: &ParsedConfig) -> Result<RunOutput> {
    let effective_params = config.effective_params()?;
    let hash = config_hash(config.subcommand(), &effective_params);
    let (result_csv, result_json) = match config {
        ParsedConfig::Generate(c) => run_generate(c)?,
        ParsedConfig::Rates(c) => run_rates_cmd(c)?,
        ParsedConfig::Variance(c) => run_variance_cmd(c)?,
        ParsedConfig::Decompose(c) => run_decompose(c)?,
        ParsedConfig::Bounds(c) => run_bounds(c)?,
        ParsedConfig::Roc(c) => run_roc(c)?,
        ParsedConfig::Train(c) => run_train(c)?,
        ParsedConfig::Eval(c) => run_eval(c)?,
    };
    Ok(RunOutput {
        subcommand: config.subcommand(),
        hash,
        result_csv,
        result_json,
        effective_params,
    })
}

fn run_generate(c: &GenerateCfg) -> Result<(String, Value)> {
    let ds = c.model.sample(c.n, RngSeed(c.seed))?;
    let csv = urank::io::to_csv_string(&ds);
    let json = json!({
        "n": ds.n(),
        "d": ds.dim(),
        "dataset": serde_json::to_value(&ds)?,
    });
    Ok((csv, json))
}

fn run_rates_cmd(c: &RatesCfg) -> Result<(String, Value)> {
    let scorers = c.class.build_scorers(&c.model)?;
    let out = run_rates(&c.model, &scorers, &c.sample_sizes, c.replicates, RngSeed(c.seed))?;
    let mut csv = String::from("n,replicate,estimator,value\n");
    for cell in &out.cells {
        let _ = writeln!(csv, "{},{},excess_risk,{}", cell.n, cell.replicate, cell.excess);
    }
    let json = json!({
        "mean_excess": out.mean_excess,
        "slope": out.slope,
        "floor": out.floor,
        "replicates": c.replicates,
        "class_size": scorers.len(),
    });
    Ok((csv, json))
}

fn run_variance_cmd(c: &VarianceCfg) -> Result<(String, Value)> {
    let out = run_variance(&c.model, &c.rule, c.n, c.replicates, RngSeed(c.seed))?;
    let mut csv = String::from("n,replicate,estimator,value\n");
    for (r, v) in out.u_values.iter().enumerate() {
        let _ = writeln!(csv, "{},{},u_stat,{}", c.n, r, v);
    }
    for (r, v) in out.split_values.iter().enumerate() {
        let _ = writeln!(csv, "{},{},split,{}", c.n, r, v);
    }
    let json = json!({
        "n": out.n,
        "replicates": out.replicates,
        "var_u": out.var_u,
        "var_split": out.var_split,
        "ratio": out.ratio,
        "ci": [out.ci.0, out.ci.1],
    });
    Ok((csv, json))
}

fn run_decompose(c: &DecomposeCfg) -> Result<(String, Value)> {
    let q = c.kernel.build(&c.model)?;
    let ds = c.model.sample(c.n, RngSeed(c.seed))?;
    let exact_possible = c.model.joint_atoms().is_ok();
    let parts = if exact_possible {
        urank::ustat::hoeffding_decompose(&q, &ds, &c.model)?
    } else {
        let inner = c.mc_inner.unwrap_or(10_000);
        urank::ustat::hoeffding_decompose_mc(&q, &ds, &c.model, inner, RngSeed(c.seed).stream(3))?
    };
    let u = urank::ustat::u_stat(&q, &ds)?;
    let residual = (u - (parts.mean + 2.0 * parts.t_n + parts.w_n)).abs();
    let degeneracy = if exact_possible {
        let hhat = urank::ustat::projected_kernel(&q, &c.model)?;
        Some(urank::ustat::degeneracy_check(&hhat, &c.model)?)
    } else {
        None
    };
    let mut csv = String::from("i,h\n");
    for (i, h) in parts.h_values.iter().enumerate() {
        let _ = writeln!(csv, "{i},{h}");
    }
    let json = json!({
        "mean": parts.mean,
        "t_n": parts.t_n,
        "w_n": parts.w_n,
        "u_stat": u,
        "reconstruction_residual": residual,
        "projected_degeneracy_residual": degeneracy,
        "exact": parts.exact,
    });
    Ok((csv, json))
}

fn run_bounds(c: &BoundsCfg) -> Result<(String, Value)> {
    let q = c.kernel.build(&c.model)?;
    let report = match c.experiment {
        TailExperiment::UstatTail => {
            let default_grid: Vec<f64> = (1..=15).map(|j| 0.02 * j as f64).collect();
            let grid = c.t_grid.clone().unwrap_or(default_grid);
            urank::bounds::ustat_tail_report(
                &q,
                &c.model,
                c.n,
                c.replicates,
                &grid,
                c.constants.dpg_c,
                RngSeed(c.seed),
            )?
        }
        TailExperiment::Moment => urank::bounds::moment_tail_harness(
            std::slice::from_ref(&q),
            &c.model,
            c.n,
            c.replicates,
            c.constants.moment_c,
            c.t_grid.as_deref(),
            RngSeed(c.seed),
        )?,
    };
    let dominated: Value = report
        .bounds
        .keys()
        .map(|id| (id.clone(), json!(report.dominated_by(id))))
        .collect::<serde_json::Map<String, Value>>()
        .into();
    let csv = report.to_csv_string();
    let json = json!({
        "report": serde_json::to_value(&report)?,
        "dominated": dominated,
    });
    Ok((csv, json))
}

fn run_roc(c: &RocCfg) -> Result<(String, Value)> {
    let ds = c.data.realize(RngSeed(c.seed))?;
    let scores = c.scorer.scores_on(&ds)?;
    let labels: Vec<f64> = ds.labels().collect();
    let curve = roc_curve(&scores, &labels)?;
    let identity = risk_auc_identity(&ds, &c.scorer)?;
    let mut json = json!({
        "auc": auc(&scores, &labels)?,
        "empirical_risk": identity.empirical_risk,
        "identity_residual": identity.residual,
        "points": curve.points,
    });
    if let Some(model) = &c.data.model {
        if matches!(model, urank::SyntheticModel::DiscreteBipartite { .. }) {
            let exact = true_roc(model, &c.scorer)?;
            json["exact"] = json!({
                "auc": true_auc(model, &c.scorer)?,
                "points": exact.points,
            });
        }
    }
    Ok((curve.to_csv_string(), json))
}

fn run_train(c: &TrainCfg) -> Result<(String, Value)> {
    let ds = c.data.realize(RngSeed(c.seed))?;
    match &c.algorithm {
        TrainSpec::Boost {
            rounds,
            thresholds,
            budget,
            cost,
        } => {
            let cfg = BoostConfig {
                rounds: *rounds,
                thresholds: thresholds.clone(),
                budget: Some(budget.unwrap_or_else(|| default_budget(*cost, ds.n()))),
                step: StepRule::ExactLineSearch,
            };
            let out = boost_rank(&ds, &cfg, *cost)?;
            let mut csv = String::from("round,cost,dim,threshold,direction,weight\n");
            for row in &out.log {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    row.round, row.cost, row.dim, row.threshold, row.direction, row.weight
                );
            }
            let json = json!({
                "scorer": serde_json::to_value(&out.scorer)?,
                "stopped_early": out.stopped_early,
                "rounds_run": out.log.len(),
                "budget": cfg.budget,
                "final_cost": out.log.last().map(|r| r.cost),
            });
            Ok((csv, json))
        }
        TrainSpec::Kernel {
            budget,
            steps,
            gamma0,
            kernel,
            bandwidth,
            cost,
        } => {
            let cfg = KernelConfig {
                kernel: kernel
                    .clone()
                    .or(bandwidth.map(|b| RankKernel::GaussianPair { bandwidth: b })),
                budget: budget.unwrap_or_else(|| default_budget(*cost, ds.n())),
                steps: *steps,
                step_size: StepSize::InvSqrt(*gamma0),
                keep: IterateChoice::BestObjective,
            };
            let out = kernel_rank(&ds, &cfg, *cost)?;
            let mut csv = String::from("step,objective,norm2\n");
            for row in &out.log {
                let _ = writeln!(csv, "{},{},{}", row.step, row.objective, row.norm2);
            }
            let json = json!({
                "scorer": serde_json::to_value(&out.scorer)?,
                "budget": cfg.budget,
                "final_objective": out.log.last().map(|r| r.objective),
                "best_objective": out
                    .log
                    .iter()
                    .map(|r| r.objective)
                    .fold(f64::INFINITY, f64::min),
            });
            Ok((csv, json))
        }
    }
}

fn run_eval(c: &EvalCfg) -> Result<(String, Value)> {
    let ds = c.data.realize(RngSeed(c.seed))?;
    let scorer = c.scorer.load()?;
    let rule = if scorer.is_instance_scorer() {
        RankingRule::from_scorer(scorer.clone())
    } else {
        RankingRule::strict_sign_of(scorer.clone())
    };
    let risk = urank::risk::empirical_risk(&rule, &ds)?;
    let mut rows: Vec<(String, f64)> = vec![("empirical_risk".into(), risk)];
    if scorer.is_instance_scorer() {
        let labels: Vec<f64> = ds.labels().collect();
        let binary = labels.iter().all(|&y| y == 1.0 || y == -1.0);
        let both = labels.iter().any(|&y| y > 0.0) && labels.iter().any(|&y| y < 0.0);
        if binary && both {
            let identity = risk_auc_identity(&ds, &scorer)?;
            rows.push(("auc".into(), identity.auc));
            rows.push(("identity_residual".into(), identity.residual));
        }
    }
    if let Some(cost) = c.cost {
        let v = empirical_cost(|a, b| scorer.pair_score(a, b), &ds, cost)?;
        rows.push(("empirical_cost".into(), v));
    }
    let mut csv = String::from("estimator,value\n");
    for (k, v) in &rows {
        let _ = writeln!(csv, "{k},{v}");
    }
    let json: Value = rows
        .into_iter()
        .map(|(k, v)| (k, json!(v)))
        .collect::<serde_json::Map<String, Value>>()
        .into();
    Ok((csv, json))
}

/// Paths of one written run.
pub struct RunPaths {
    pub dir: PathBuf,
    pub result_csv: PathBuf,
    pub result_json: PathBuf,
    pub meta_json: PathBuf,
}

/// Write the run under `<out>/<subcommand>/<hash>/`. Refuses to overwrite
/// an existing result unless `force` is set.
pub fn write_run(out_root: &Path, run: &RunOutput, wall_ms: u128, force: bool) -> Result<RunPaths> {
    let dir = out_root.join(run.subcommand).join(&run.hash);
    let result_json_path = dir.join("result.json");
    if result_json_path.exists() && !force {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::AlreadyExists,
            format!("{} exists; pass --force to overwrite", result_json_path.display()),
        )));
    }
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("result.csv");
    std::fs::write(&csv_path, &run.result_csv)?;
    let mut json_text = serde_json::to_string_pretty(&run.result_json)?;
    json_text.push('\n');
    std::fs::write(&result_json_path, json_text)?;
    let meta = json!({
        "subcommand": run.subcommand,
        "config_hash": run.hash,
        "wall_ms": wall_ms,
        "written_at_unix_ms": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        "version": env!("CARGO_PKG_VERSION"),
        "effective_config": {
            "subcommand": run.subcommand,
            "params": run.effective_params,
        },
    });
    let meta_path = dir.join("meta.json");
    let mut meta_text = serde_json::to_string_pretty(&meta)?;
    meta_text.push('\n');
    std::fs::write(&meta_path, meta_text)?;
    Ok(RunPaths {
        dir,
        result_csv: csv_path,
        result_json: result_json_path,
        meta_json: meta_path,
    })
}
