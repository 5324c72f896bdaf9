//! Closed-form risk-bound evaluators, Monte Carlo complexity estimates,
//! classical tail inequalities for second-order U-statistics, and an
//! empirical tail-versus-bound harness.
//!
//! Universal constants in these bounds (the chaos-inequality constant, the
//! VC constant, the conditional-variance tail constant) are user
//! parameters with documented defaults; the harness reports whether the
//! empirical tails fall below the bound shapes at the chosen constants,
//! never asserting any particular constant value.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SyntheticModel};
use crate::error::{Error, Result};
use crate::numeric::{csum, mean};
use crate::risk::RankingRule;
use crate::rng::RngSeed;
use crate::ustat::{self, PairKernel};

// ---------------------------------------------------------------------------
// Rademacher averages over block pairs
// ---------------------------------------------------------------------------

/// Misranking indicators of each rule over the floor(n/2) block pairs
/// (i, m+i); the randomized sup runs over these vectors.
fn block_indicators(rules: &[RankingRule], data: &Dataset) -> Result<Vec<Vec<f64>>> {
    if rules.is_empty() {
        return Err(Error::EmptyClass("rademacher average".into()));
    }
    data.require_pairs()?;
    let s = data.samples();
    let m = s.len() / 2;
    Ok(rules
        .iter()
        .map(|r| {
            (0..m)
                .map(|i| {
                    let z = crate::data::half_label_diff(s[i].y, s[m + i].y);
                    if z == 0.0 {
                        0.0
                    } else {
                        f64::from(z * r.evaluate(&s[i].x, &s[m + i].x) < 0.0)
                    }
                })
                .collect()
        })
        .collect())
}

fn sup_signed_mean(indicators: &[Vec<f64>], signs: &[f64]) -> f64 {
    let m = signs.len() as f64;
    indicators
        .iter()
        .map(|v| csum(v.iter().zip(signs).map(|(x, e)| x * e)).abs() / m)
        .fold(0.0, f64::max)
}

/// Monte Carlo Rademacher average of a finite rule class over the block
/// pairs: the mean over sign draws of
/// `sup_r (1/m) |sum_i eps_i 1{Z_(i,m+i) r(...) < 0}|`.
pub fn rademacher_mc(
    rules: &[RankingRule],
    data: &Dataset,
    draws: usize,
    seed: RngSeed,
) -> Result<f64> {
    if draws == 0 {
        return Err(Error::ParamRange("draws must be >= 1".into()));
    }
    let indicators = block_indicators(rules, data)?;
    let m = data.n() / 2;
    let values: Vec<f64> = (0..draws as u64)
        .into_par_iter()
        .map(|d| {
            let signs: Vec<f64> = ustat::rademacher_signs(m, seed.replicate(d))
                .into_iter()
                .map(f64::from)
                .collect();
            sup_signed_mean(&indicators, &signs)
        })
        .collect();
    Ok(mean(&values))
}

/// Exact Rademacher average by enumerating all 2^m sign patterns
/// (available for m = floor(n/2) up to 20).
pub fn rademacher_exact(rules: &[RankingRule], data: &Dataset) -> Result<f64> {
    let indicators = block_indicators(rules, data)?;
    let m = data.n() / 2;
    if m > 20 {
        return Err(Error::ParamRange(format!(
            "exact enumeration supports m <= 20, got {m}"
        )));
    }
    let total = 1u64 << m;
    let acc: f64 = (0..total)
        .into_par_iter()
        .map(|mask| {
            let signs: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            sup_signed_mean(&indicators, &signs)
        })
        .sum();
    Ok(acc / total as f64)
}

// ---------------------------------------------------------------------------
// Closed-form bounds
// ---------------------------------------------------------------------------

/// High-probability excess-risk bound from a Rademacher average:
/// `4 er_n + 4 sqrt(ln(1/delta) / (n-1))`.
pub fn first_order_bound(er_n: f64, n: usize, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::ParamRange(format!("delta {delta} outside (0,1)")));
    }
    Ok(4.0 * er_n + 4.0 * ((1.0 / delta).ln() / (n - 1) as f64).sqrt())
}

/// Rademacher average bound for a VC class: `c sqrt(V / n)`.
pub fn vc_rademacher_bound(v: usize, n: usize, c: f64) -> Result<f64> {
    if v == 0 || n == 0 {
        return Err(Error::ParamRange("V >= 1 and n >= 1 required".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::ParamRange("constant must be positive".into()));
    }
    Ok(c * (v as f64 / n as f64).sqrt())
}

/// Fast-rate excess-risk bound under the variance condition with exponent
/// alpha: `C (V log(n/delta) / n)^(1/(2-alpha))`. At alpha = 0 the
/// exponent is 1/2 (the slow rate), at alpha = 1 it is 1.
pub fn fast_rate_bound(v: usize, n: usize, delta: f64, alpha: f64, c: f64) -> Result<f64> {
    if v == 0 {
        return Err(Error::ParamRange("V >= 1 required".into()));
    }
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::ParamRange(format!("delta {delta} outside (0,1)")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ParamRange(format!("alpha {alpha} outside [0,1]")));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::ParamRange("constant must be positive".into()));
    }
    let base = v as f64 * (n as f64 / delta).ln() / n as f64;
    Ok(c * base.powf(1.0 / (2.0 - alpha)))
}

/// The three classical tail bounds for a second-order U-statistic
/// deviation `|U_n - E U_n| > t` with a kernel of unit range:
/// Hoeffding `2 exp(-2 floor(n/2) t^2)`, the Bernstein form
/// `2 exp(-floor(n/2) t^2 / (2 sigma^2 + 2t/3))`, and the
/// conditional-variance (de la Pena-Gine) form
/// `4 exp(-n t^2 / (8 s^2 + c t))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailBounds {
    pub hoeffding: f64,
    pub bernstein: f64,
    pub dpg: f64,
}

pub fn tail_bounds(n: usize, t: f64, sigma2: f64, s2: f64, c: f64) -> Result<TailBounds> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::ParamRange("t must be positive".into()));
    }
    if sigma2 < 0.0 || s2 < 0.0 {
        return Err(Error::ParamRange("variances must be nonnegative".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::ParamRange("constant must be positive".into()));
    }
    let m = (n / 2) as f64;
    Ok(TailBounds {
        hoeffding: 2.0 * (-2.0 * m * t * t).exp(),
        bernstein: 2.0 * (-(m * t * t) / (2.0 * sigma2 + 2.0 * t / 3.0)).exp(),
        dpg: 4.0 * (-(n as f64 * t * t) / (8.0 * s2 + c * t)).exp(),
    })
}

/// Rademacher average of an RKHS ball of radius B over one realized set of
/// block-pair diagonal kernel values: `(2B/n) sqrt(sum_i k(w_i, w_i))`.
pub fn kernel_class_rademacher(b: f64, diag: &[f64], n: usize) -> Result<f64> {
    if b < 0.0 {
        return Err(Error::ParamRange("radius must be nonnegative".into()));
    }
    if n == 0 {
        return Err(Error::ParamRange("n >= 1 required".into()));
    }
    if diag.iter().any(|&d| d < 0.0) {
        return Err(Error::ParamRange(
            "diagonal kernel values must be nonnegative".into(),
        ));
    }
    Ok(2.0 * b / n as f64 * csum(diag.iter().copied()).sqrt())
}

// ---------------------------------------------------------------------------
// Tail reports
// ---------------------------------------------------------------------------

/// Empirical tail frequencies against bound curves on a shared t grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    /// Which deviation statistic the tail describes.
    pub statistic: String,
    pub n: usize,
    pub replicates: usize,
    pub t_grid: Vec<f64>,
    /// `P(statistic > threshold(t))` estimated over the replicates;
    /// nonincreasing in t.
    pub empirical: Vec<f64>,
    /// Bound values per inequality id, aligned with the grid.
    pub bounds: BTreeMap<String, Vec<f64>>,
    /// Scalar Monte Carlo estimates and exact inputs used by the bounds.
    pub estimates: BTreeMap<String, f64>,
}

const BOUND_COLUMN_ORDER: [&str; 4] = ["hoeffding", "bernstein", "dpg", "moment"];

impl TailReport {
    /// CSV with columns `t,empirical,bound_<id>..` in canonical id order.
    pub fn to_csv_string(&self) -> String {
        let ids: Vec<&str> = BOUND_COLUMN_ORDER
            .iter()
            .copied()
            .filter(|id| self.bounds.contains_key(*id))
            .collect();
        let mut out = String::from("t,empirical");
        for id in &ids {
            out.push_str(&format!(",bound_{id}"));
        }
        out.push('\n');
        for (i, t) in self.t_grid.iter().enumerate() {
            out.push_str(&format!("{t},{}", self.empirical[i]));
            for id in &ids {
                out.push_str(&format!(",{}", self.bounds[*id][i]));
            }
            out.push('\n');
        }
        out
    }

    /// True when the empirical tail sits at or below the named bound at
    /// every grid point.
    pub fn dominated_by(&self, id: &str) -> Option<bool> {
        let b = self.bounds.get(id)?;
        Some(
            self.empirical
                .iter()
                .zip(b)
                .all(|(e, bound)| e <= bound),
        )
    }
}

fn empirical_tail(devs: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| devs.iter().filter(|&&d| d > t).count() as f64 / devs.len() as f64)
        .collect()
}

/// Monte Carlo tail report for the deviation `|U_n - E U_n|` of one kernel
/// under a finite-support model, against the three closed-form tails with
/// the exact kernel variance and projection variance plugged in. The
/// Hoeffding and Bernstein columns assume a kernel of unit range.
pub fn ustat_tail_report(
    q: &PairKernel,
    model: &SyntheticModel,
    n: usize,
    replicates: usize,
    t_grid: &[f64],
    dpg_c: f64,
    seed: RngSeed,
) -> Result<TailReport> {
    if replicates == 0 {
        return Err(Error::ParamRange("replicates must be >= 1".into()));
    }
    if t_grid.iter().any(|&t| t <= 0.0) {
        return Err(Error::ParamRange("t grid must be positive".into()));
    }
    let mean_exact = ustat::kernel_mean(q, model)?;
    let sq = q.clone();
    let q2 = PairKernel::new(move |a, b| sq.eval(a, b) * sq.eval(a, b), q.is_symmetric());
    let second_moment = ustat::kernel_mean(&q2, model)?;
    let sigma2 = (second_moment - mean_exact * mean_exact).max(0.0);
    let s2 = ustat::conditional_variance(q, model)?;
    let devs: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ds = model.sample(n, seed.replicate(r))?;
            Ok((ustat::u_stat(q, &ds)? - mean_exact).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let empirical = empirical_tail(&devs, t_grid);
    let mut bounds = BTreeMap::new();
    let mut hoeff = Vec::with_capacity(t_grid.len());
    let mut bern = Vec::with_capacity(t_grid.len());
    let mut dpg = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let b = tail_bounds(n, t, sigma2, s2, dpg_c)?;
        hoeff.push(b.hoeffding);
        bern.push(b.bernstein);
        dpg.push(b.dpg);
    }
    bounds.insert("hoeffding".into(), hoeff);
    bounds.insert("bernstein".into(), bern);
    bounds.insert("dpg".into(), dpg);
    let mut estimates = BTreeMap::new();
    estimates.insert("kernel_mean".into(), mean_exact);
    estimates.insert("kernel_variance".into(), sigma2);
    estimates.insert("projection_variance".into(), s2);
    Ok(TailReport {
        statistic: "abs_deviation_u_stat".into(),
        n,
        replicates,
        t_grid: t_grid.to_vec(),
        empirical,
        bounds,
        estimates,
    })
}

/// Per-replicate chaos draws: the realized supremum and the three
/// symmetrized statistics, with the sample redrawn each replicate.
struct ChaosDraw {
    z: f64,
    z_eps: f64,
    u_eps: f64,
    m: f64,
}

/// Monte Carlo harness for the degenerate-chaos tail: estimates
/// `E Z_eps`, `E U_eps`, `E M` and the tail of
/// `Z = sup_f |sum_{i!=j} f(X_i, X_j)|` over replicates, and evaluates the
/// chaos tail shape
/// `exp(-(1/C) min((t/EU)^2, t/(EM + Fn), (t/(F sqrt n))^(2/3), sqrt(t/F)))`
/// at the user constant C against the empirical frequency of
/// `Z > C E Z_eps + t`.
pub fn moment_tail_harness(
    kernels: &[PairKernel],
    model: &SyntheticModel,
    n: usize,
    replicates: usize,
    c_const: f64,
    t_grid: Option<&[f64]>,
    seed: RngSeed,
) -> Result<TailReport> {
    if kernels.is_empty() {
        return Err(Error::EmptyClass("moment tail harness".into()));
    }
    if replicates < 100 {
        return Err(Error::ParamRange(
            "at least 100 replicates required".into(),
        ));
    }
    if c_const.is_nan() || c_const <= 0.0 {
        return Err(Error::ParamRange("C must be positive".into()));
    }
    for q in kernels {
        let d = ustat::degeneracy_check(q, model)?;
        if d >= 1e-10 {
            return Err(Error::ParamRange(format!(
                "kernel class must be degenerate under the model (residual {d:e})"
            )));
        }
    }
    let sup_f = kernels
        .iter()
        .map(|q| ustat::sup_norm_on_support(q, model))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let draws: Vec<ChaosDraw> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let ds = model.sample(n, seed.replicate(r))?;
            let stats = ustat::chaos_statistics(kernels, &ds, seed.replicate(r).stream(1))?;
            Ok(ChaosDraw {
                z: ustat::chaos_supremum(kernels, &ds)?,
                z_eps: stats.z_eps,
                u_eps: stats.u_eps,
                m: stats.m_stat,
            })
        })
        .collect::<Result<Vec<ChaosDraw>>>()?;
    let ez = mean(&draws.iter().map(|d| d.z_eps).collect::<Vec<_>>());
    let eu = mean(&draws.iter().map(|d| d.u_eps).collect::<Vec<_>>());
    let em = mean(&draws.iter().map(|d| d.m).collect::<Vec<_>>());
    let zs: Vec<f64> = draws.iter().map(|d| d.z).collect();
    let default_grid: Vec<f64>;
    let grid: &[f64] = match t_grid {
        Some(g) => {
            if g.iter().any(|&t| t <= 0.0) {
                return Err(Error::ParamRange("t grid must be positive".into()));
            }
            g
        }
        None => {
            // Scale-equivariant default: 15 points proportional to the
            // exact sup-norm times sqrt(n).
            let unit = if sup_f > 0.0 {
                0.5 * sup_f * (n as f64).sqrt()
            } else {
                1.0
            };
            default_grid = (1..=15).map(|j| j as f64 * unit).collect();
            &default_grid
        }
    };
    let threshold_base = c_const * ez;
    let shifted: Vec<f64> = zs.iter().map(|z| z - threshold_base).collect();
    let empirical = empirical_tail(&shifted, grid);
    let fn_term = em + sup_f * n as f64;
    let bound: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let r1 = if eu > 0.0 { (t / eu) * (t / eu) } else { f64::INFINITY };
            let r2 = if fn_term > 0.0 { t / fn_term } else { f64::INFINITY };
            let (r3, r4) = if sup_f > 0.0 {
                (
                    (t / (sup_f * (n as f64).sqrt())).powf(2.0 / 3.0),
                    (t / sup_f).sqrt(),
                )
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            (-(r1.min(r2).min(r3).min(r4)) / c_const).exp()
        })
        .collect();
    let mut bounds = BTreeMap::new();
    bounds.insert("moment".into(), bound);
    let mut estimates = BTreeMap::new();
    estimates.insert("z_eps_mean".into(), ez);
    estimates.insert("u_eps_mean".into(), eu);
    estimates.insert("m_mean".into(), em);
    estimates.insert("sup_norm".into(), sup_f);
    estimates.insert("z_mean".into(), mean(&zs));
    estimates.insert(
        "z_max".into(),
        zs.iter().fold(0.0f64, |a, &b| a.max(b)),
    );
    estimates.insert("threshold_base".into(), threshold_base);
    Ok(TailReport {
        statistic: "chaos_supremum".into(),
        n,
        replicates,
        t_grid: grid.to_vec(),
        empirical,
        bounds,
        estimates,
    })
}
