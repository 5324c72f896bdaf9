//! Multi-replicate experiment drivers behind the `rates` and `variance`
//! subcommands. Replicates fan out across the rayon pool with
//! per-replicate seeds and results are merged in (n, replicate) order, so
//! outputs do not depend on worker count or scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};


use urank::numeric::{ls_slope, mean, sample_variance};
use urank::risk::{
    bayes_risk, empirical_risk_grouped, mistake_kernel, true_risk, RankingRule, ScoringFunction,
};
use urank::ustat::{split_estimate, u_stat};
use urank::{Dataset, Error, LabeledSample, Result, RngSeed, SyntheticModel};

/// Cells with zero mean excess enter the log-log slope fit at this floor
/// (exact zeros occur once the sample always witnesses every suboptimal
/// rule; the slope criterion is one-sided, so flooring is conservative).
pub const EXCESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateCell {
    pub n: usize,
    pub replicate: usize,
    /// Exact excess risk of the empirically selected rule.
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesResult {
    pub cells: Vec<RateCell>,
    /// Mean excess per sample size, in sample-size order.
    pub mean_excess: Vec<(usize, f64)>,
    /// Least-squares slope of log mean excess against log n.
    pub slope: f64,
    pub floor: f64,
}

/// Group a sample drawn from a finite-support model into (atom, count)
/// pairs; exact because every drawn row equals one of the model's joint
/// atoms.
fn group_by_atom(data: &Dataset, model: &SyntheticModel) -> Result<Vec<(LabeledSample, usize)>> {
    let mut groups: Vec<(LabeledSample, usize)> = Vec::new();
    for s in data.samples() {
        if model.atom_index(&s.x).is_none() {
            return Err(Error::InvalidModel("sample off the model support".into()));
        }
        match groups.iter_mut().find(|(g, _)| g == s) {
            Some((_, c)) => *c += 1,
            None => groups.push((s.clone(), 1)),
        }
    }
    Ok(groups)
}

/// Empirical risk minimization over the class, per (sample size,
/// replicate) cell, scoring each selected rule by its exact excess risk.
/// The cell seed depends only on (base seed, n, replicate), so adding
/// replicates never changes existing cells.
pub fn run_rates(
    model: &SyntheticModel,
    scorers: &[ScoringFunction],
    sample_sizes: &[usize],
    replicates: usize,
    seed: RngSeed,
) -> Result<RatesResult> {
    if scorers.is_empty() {
        return Err(Error::EmptyClass("rate experiment".into()));
    }
    let l_star = bayes_risk(model)?;
    let rules: Vec<RankingRule> = scorers
        .iter()
        .map(|s| RankingRule::from_scorer(s.clone()))
        .collect();
    let mut cell_ids = Vec::new();
    for &n in sample_sizes {
        for r in 0..replicates {
            cell_ids.push((n, r));
        }
    }
    let cells: Vec<RateCell> = cell_ids
        .par_iter()
        .map(|&(n, r)| {
            let cell_seed = seed.stream(n as u64).replicate(r as u64);
            let ds = model.sample(n, cell_seed)?;
            let groups = group_by_atom(&ds, model)?;
            let mut best = (0usize, f64::INFINITY);
            for (i, rule) in rules.iter().enumerate() {
                let l = empirical_risk_grouped(rule, &groups)?;
                if l < best.1 {
                    best = (i, l);
                }
            }
            let excess = true_risk(&rules[best.0], model)? - l_star;
            Ok(RateCell {
                n,
                replicate: r,
                excess,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean_excess = Vec::new();
    for &n in sample_sizes {
        let vals: Vec<f64> = cells
            .iter()
            .filter(|c| c.n == n)
            .map(|c| c.excess)
            .collect();
        mean_excess.push((n, mean(&vals)));
    }
    let xs: Vec<f64> = mean_excess.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = mean_excess
        .iter()
        .map(|(_, e)| e.max(EXCESS_FLOOR).ln())
        .collect();
    let slope = ls_slope(&xs, &ys);
    Ok(RatesResult {
        cells,
        mean_excess,
        slope,
        floor: EXCESS_FLOOR,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarianceResult {
    pub n: usize,
    pub replicates: usize,
    /// Per-replicate pooled-pairs estimates.
    pub u_values: Vec<f64>,
    /// Per-replicate split-sample estimates.
    pub split_values: Vec<f64>,
    pub var_u: f64,
    pub var_split: f64,
    /// `var_u / var_split`.
    pub ratio: f64,
    /// Bootstrap 95% interval for the ratio.
    pub ci: (f64, f64),
}

/// Replicated comparison of the pooled-pairs risk estimate against the
/// split-sample estimate for a fixed rule, with a seeded bootstrap
/// interval for the variance ratio.
pub fn run_variance(
    model: &SyntheticModel,
    rule: &RankingRule,
    n: usize,
    replicates: usize,
    seed: RngSeed,
) -> Result<VarianceResult> {
    if replicates < 100 {
        return Err(Error::ParamRange(
            "variance comparison needs at least 100 replicates".into(),
        ));
    }
    let q = mistake_kernel(rule.clone());
    let pairs: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ds = model.sample(n, seed.replicate(r))?;
            Ok((u_stat(&q, &ds)?, split_estimate(&q, &ds)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let u_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let split_values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let var_u = sample_variance(&u_values);
    let var_split = sample_variance(&split_values);
    let ratio = var_u / var_split;
    let ci = bootstrap_ratio_ci(&u_values, &split_values, 1000, seed.stream(91));
    Ok(VarianceResult {
        n,
        replicates,
        u_values,
        split_values,
        var_u,
        var_split,
        ratio,
        ci,
    })
}

/// Percentile bootstrap 95% interval for `Var(u) / Var(split)`, resampling
/// replicate pairs jointly.
fn bootstrap_ratio_ci(
    u_values: &[f64],
    split_values: &[f64],
    resamples: usize,
    seed: RngSeed,
) -> (f64, f64) {
    use rand::Rng;
    let mut rng = seed.rng();
    let n = u_values.len();
    let mut ratios = Vec::with_capacity(resamples);
    let mut bu = vec![0.0; n];
    let mut bs = vec![0.0; n];
    for _ in 0..resamples {
        for i in 0..n {
            let j = rng.random_range(0..n);
            bu[i] = u_values[j];
            bs[i] = split_values[j];
        }
        ratios.push(sample_variance(&bu) / sample_variance(&bs));
    }
    // total order keeps degenerate 0/0 resamples (NaN) deterministic
    ratios.sort_by(f64::total_cmp);
    let lo = ratios[(0.025 * resamples as f64).floor() as usize];
    let hi = ratios[((0.975 * resamples as f64).floor() as usize).min(resamples - 1)];
    (lo, hi)
}
