//! Empirical minimizers: exact ERM over finite rule classes, stump search,
//! convex-surrogate boosting over a weighted vote class, kernel ranking in
//! an RKHS ball, and the surrogate-to-ranking calibration transform.
//!
//! Surrogate costs are convex functions with `phi(0) = 1` and
//! `phi(x) >= 1{x >= 0}`, so the empirical cost of any pair scorer
//! dominates the empirical misranking rate of its strict sign rule
//! pointwise. Pairs with tied labels enter the cost at `phi(0) = 1`
//! (their sign is 0), a constant offset that cancels in minimizer
//! comparisons.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{grid_then_golden, CompensatedSum};
use crate::risk::{empirical_risk, RankKernel, RankingRule, ScoringFunction};

// ---------------------------------------------------------------------------
// Cost functions
// ---------------------------------------------------------------------------

/// Convex surrogate cost. All variants satisfy `phi(0) = 1` and dominate
/// the step indicator `1{x >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    /// `exp(x)`.
    Exponential,
    /// `log2(1 + exp(x))`.
    Logit,
    /// `(1 + x)_+`.
    Hinge,
}

impl CostFunction {
    pub fn value(self, x: f64) -> f64 {
        match self {
            CostFunction::Exponential => x.exp(),
            CostFunction::Logit => {
                // log2(1+e^x), stable on both tails
                if x > 0.0 {
                    (x + (-x).exp().ln_1p()) / std::f64::consts::LN_2
                } else {
                    x.exp().ln_1p() / std::f64::consts::LN_2
                }
            }
            CostFunction::Hinge => (1.0 + x).max(0.0),
        }
    }

    /// One-sided (right) derivative.
    pub fn right_derivative(self, x: f64) -> f64 {
        match self {
            CostFunction::Exponential => x.exp(),
            CostFunction::Logit => {
                let s = if x > 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                };
                s / std::f64::consts::LN_2
            }
            CostFunction::Hinge => {
                if x >= -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Empirical surrogate cost of a pair scorer:
/// `(1/(n(n-1))) sum_{i != j} phi(-sgn(Z_ij) f(x_i, x_j))`.
pub fn empirical_cost<F>(f: F, data: &Dataset, cost: CostFunction) -> Result<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    data.require_pairs()?;
    let s = data.samples();
    let n = s.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let z = crate::data::half_label_diff(s[i].y, s[j].y);
            let u = if z == 0.0 {
                0.0
            } else {
                -z.signum() * f(&s[i].x, &s[j].x)
            };
            acc.add(cost.value(u));
        }
    }
    Ok(acc.value() / (n as f64 * (n - 1) as f64))
}

// ---------------------------------------------------------------------------
// Exact empirical risk minimization
// ---------------------------------------------------------------------------

/// Exact argmin of the empirical ranking risk over a finite rule list.
/// Ties break to the lowest index. Returns (index, risk).
pub fn erm_finite(rules: &[RankingRule], data: &Dataset) -> Result<(usize, f64)> {
    if rules.is_empty() {
        return Err(Error::EmptyClass("erm over an empty rule list".into()));
    }
    data.require_pairs()?;
    let mut best = (0usize, f64::INFINITY);
    for (i, r) in rules.iter().enumerate() {
        let l = empirical_risk(r, data)?;
        if l < best.1 {
            best = (i, l);
        }
    }
    Ok(best)
}

/// All stumps over a threshold grid: both directions per (dim, threshold),
/// in deterministic iteration order.
pub fn stump_grid(thresholds: &[Vec<f64>]) -> Vec<ScoringFunction> {
    let mut out = Vec::new();
    for (dim, ts) in thresholds.iter().enumerate() {
        for &t in ts {
            for dir in [1i8, -1] {
                out.push(ScoringFunction::Stump {
                    dim,
                    threshold: t,
                    direction: dir,
                });
            }
        }
    }
    out
}

/// Exhaustive stump search: the (dimension, threshold, direction) whose
/// induced rule minimizes the empirical ranking risk. Returns the scorer
/// and its risk; ties break to the earliest grid entry.
pub fn erm_stumps(data: &Dataset, thresholds: &[Vec<f64>]) -> Result<(ScoringFunction, f64)> {
    let grid = stump_grid(thresholds);
    if grid.is_empty() {
        return Err(Error::EmptyClass("empty stump grid".into()));
    }
    let rules: Vec<RankingRule> = grid
        .iter()
        .map(|s| RankingRule::from_scorer(s.clone()))
        .collect();
    let (idx, risk) = erm_finite(&rules, data)?;
    Ok((grid[idx].clone(), risk))
}

// ---------------------------------------------------------------------------
// Boosting over a weighted vote of base rules
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Golden-section line search on the convex 1-D restriction.
    ExactLineSearch,
    /// Fixed step weight.
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Number of greedy rounds.
    pub rounds: usize,
    /// Stump threshold grid per dimension (the base class).
    pub thresholds: Vec<Vec<f64>>,
    /// Bound on the total weight `sum |w_j|`; None leaves it free.
    pub budget: Option<f64>,
    pub step: StepRule,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostRound {
    pub round: usize,
    /// Surrogate cost after the round.
    pub cost: f64,
    /// Chosen base stump.
    pub dim: usize,
    pub threshold: f64,
    pub direction: i8,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostResult {
    /// The trained weighted vote (an ensemble pair scorer).
    pub scorer: ScoringFunction,
    /// Per-round log; `cost` is non-increasing.
    pub log: Vec<BoostRound>,
    /// True when no descent direction remained before `rounds` finished.
    pub stopped_early: bool,
}

const LINE_SEARCH_TOL: f64 = 1e-10;
const LINE_SEARCH_BRACKET: f64 = 10.0;
const LINE_SEARCH_MAX_BRACKET: f64 = 640.0;

/// Greedy functional coordinate descent on the empirical surrogate cost
/// over the span of stump-induced base rules. Each round pairs every base
/// rule with its exact 1-D line-search optimum and takes the best pair;
/// the weight budget, when present, truncates the last step.
pub fn boost_rank(data: &Dataset, config: &BoostConfig, cost: CostFunction) -> Result<BoostResult> {
    data.require_pairs()?;
    if config.rounds == 0 {
        return Err(Error::ParamRange("rounds must be >= 1".into()));
    }
    if let Some(b) = config.budget {
        if b.is_nan() || b <= 0.0 {
            return Err(Error::ParamRange("budget must be positive".into()));
        }
    }
    let grid = stump_grid(&config.thresholds);
    if grid.is_empty() {
        return Err(Error::EmptyClass("empty stump grid".into()));
    }
    let s = data.samples();
    let n = s.len();
    // Ordered pairs with a label gap; tied pairs add the constant phi(0).
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let z = crate::data::half_label_diff(s[i].y, s[j].y);
            if z != 0.0 {
                pairs.push((i, j, -z.signum()));
            }
        }
    }
    let total_pairs = (n * (n - 1)) as f64;
    let tied = total_pairs - pairs.len() as f64;
    // Signed base-rule values per candidate and pair: c_{g,p} = -sgn(Z_p) g(pair).
    let signed: Vec<Vec<i8>> = grid
        .iter()
        .map(|g| {
            let rule = RankingRule::from_scorer(g.clone());
            pairs
                .iter()
                .map(|&(i, j, sg)| (sg * rule.evaluate(&s[i].x, &s[j].x)) as i8)
                .collect()
        })
        .collect();

    let objective = |margins: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        for &u in margins {
            acc.add(cost.value(u));
        }
        (acc.value() + tied) / total_pairs
    };

    let mut margins = vec![0.0f64; pairs.len()]; // u_p = -sgn(Z_p) f(pair)
    let mut current = objective(&margins);
    let mut members: Vec<(f64, RankingRule)> = Vec::new();
    let mut weight_total = 0.0f64;
    let mut log = Vec::new();
    let mut stopped_early = false;

    'rounds: for round in 0..config.rounds {
        // Best (candidate, weight) by exact line search.
        let mut best: Option<(usize, f64, f64)> = None; // (idx, w, value)
        for (ci, cvals) in signed.iter().enumerate() {
            let w = match config.step {
                StepRule::Fixed(w) => w,
                StepRule::ExactLineSearch => {
                    let f = |w: f64| -> f64 {
                        let mut acc = CompensatedSum::new();
                        for (u, &c) in margins.iter().zip(cvals) {
                            acc.add(cost.value(u + w * f64::from(c)));
                        }
                        (acc.value() + tied) / total_pairs
                    };
                    // Expand the bracket until the minimum is interior.
                    let mut half = LINE_SEARCH_BRACKET;
                    loop {
                        let probe = 1e-6 * half;
                        let interior = f(-half) >= f(-half + probe) || f(-half) >= f(0.0);
                        let interior_hi = f(half) >= f(half - probe) || f(half) >= f(0.0);
                        if (interior && interior_hi) || half >= LINE_SEARCH_MAX_BRACKET {
                            break;
                        }
                        half *= 2.0;
                    }
                    grid_then_golden(f, -half, half, 64, LINE_SEARCH_TOL).0
                }
            };
            let value = {
                let mut acc = CompensatedSum::new();
                for (u, &c) in margins.iter().zip(cvals) {
                    acc.add(cost.value(u + w * f64::from(c)));
                }
                (acc.value() + tied) / total_pairs
            };
            if best.as_ref().is_none_or(|b| value < b.2) {
                best = Some((ci, w, value));
            }
        }
        let (ci, mut w, mut value) = best.expect("non-empty grid");
        // Respect the weight budget by truncating the step.
        if let Some(b) = config.budget {
            let remaining = b - weight_total;
            if remaining <= 1e-12 {
                stopped_early = true;
                break 'rounds;
            }
            if w.abs() > remaining {
                w = w.signum() * remaining;
                let cvals = &signed[ci];
                let mut acc = CompensatedSum::new();
                for (u, &c) in margins.iter().zip(cvals) {
                    acc.add(cost.value(u + w * f64::from(c)));
                }
                value = (acc.value() + tied) / total_pairs;
            }
        }
        if value >= current - 1e-15 || w.abs() < 1e-12 {
            stopped_early = true;
            break 'rounds;
        }
        for (u, &c) in margins.iter_mut().zip(&signed[ci]) {
            *u += w * f64::from(c);
        }
        current = value;
        weight_total += w.abs();
        let ScoringFunction::Stump {
            dim,
            threshold,
            direction,
        } = grid[ci]
        else {
            unreachable!()
        };
        members.push((w, RankingRule::from_scorer(grid[ci].clone())));
        log.push(BoostRound {
            round,
            cost: current,
            dim,
            threshold,
            direction,
            weight: w,
        });
    }

    Ok(BoostResult {
        scorer: ScoringFunction::Ensemble { members },
        log,
        stopped_early,
    })
}

/// Weight schedule satisfying the vanishing-complexity condition
/// `B_n^2 phi'(B_n) / sqrt(n) -> 0`: logarithmic for the exponential cost
/// (whose derivative grows with the budget), polynomial for the bounded-
/// derivative costs.
pub fn default_budget(cost: CostFunction, n: usize) -> f64 {
    let n = n.max(2) as f64;
    match cost {
        CostFunction::Exponential => 0.25 * n.ln(),
        CostFunction::Logit | CostFunction::Hinge => n.powf(0.125),
    }
}

// ---------------------------------------------------------------------------
// Kernel ranking by projected subgradient descent
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    Fixed(f64),
    /// `gamma0 / sqrt(t+1)`.
    InvSqrt(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterateChoice {
    Final,
    BestObjective,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Pair kernel; None selects a gaussian with the median pairwise
    /// anchor distance as bandwidth.
    pub kernel: Option<RankKernel>,
    /// RKHS ball radius B (the constraint is `c' K c <= B^2`).
    pub budget: f64,
    pub steps: usize,
    pub step_size: StepSize,
    pub keep: IterateChoice,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelTrace {
    pub step: usize,
    /// Surrogate cost after the projection.
    pub objective: f64,
    /// Squared RKHS norm `c' K c` after the projection.
    pub norm2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelResult {
    pub scorer: ScoringFunction,
    pub log: Vec<KernelTrace>,
}

/// Median pairwise distance between anchor pair points (concatenated
/// features), the default bandwidth. Deterministically subsampled to at
/// most 512 anchors for the quadratic scan.
fn median_anchor_distance(anchors: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let cap = anchors.len().min(512);
    let mut dists = Vec::with_capacity(cap * (cap - 1) / 2);
    for i in 0..cap {
        for j in (i + 1)..cap {
            let (a, b) = (&anchors[i], &anchors[j]);
            let mut d2 = 0.0;
            for (u, v) in a.0.iter().zip(&b.0) {
                d2 += (u - v) * (u - v);
            }
            for (u, v) in a.1.iter().zip(&b.1) {
                d2 += (u - v) * (u - v);
            }
            dists.push(d2.sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists[dists.len() / 2];
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Projected subgradient descent on the empirical surrogate cost over the
/// RKHS ball of radius B, expanded over the training pair points. After
/// every step the coefficient vector is rescaled back onto the ball
/// whenever `c' K c > B^2`.
pub fn kernel_rank(data: &Dataset, config: &KernelConfig, cost: CostFunction) -> Result<KernelResult> {
    data.require_pairs()?;
    if config.budget.is_nan() || config.budget <= 0.0 {
        return Err(Error::ParamRange("ball radius must be positive".into()));
    }
    if let Some(k) = &config.kernel {
        k.validate()?;
    }
    let s = data.samples();
    let n = s.len();
    let mut anchors: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n * (n - 1));
    let mut pair_sign = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            anchors.push((s[i].x.clone(), s[j].x.clone()));
            pair_sign.push(crate::data::half_label_diff(s[i].y, s[j].y).signum());
        }
    }
    let kernel = config.kernel.clone().unwrap_or(RankKernel::GaussianPair {
        bandwidth: median_anchor_distance(&anchors),
    });
    let a = anchors.len();
    // Gram matrix over anchors (row-major), with a finiteness check.
    let mut gram = vec![0.0f64; a * a];
    for i in 0..a {
        for j in i..a {
            let v = kernel.eval(
                (&anchors[i].0, &anchors[i].1),
                (&anchors[j].0, &anchors[j].1),
            );
            if !v.is_finite() {
                return Err(Error::NonFinite("kernel value in Gram assembly".into()));
            }
            gram[i * a + j] = v;
            gram[j * a + i] = v;
        }
    }
    let matvec = |c: &[f64]| -> Vec<f64> {
        (0..a)
            .map(|i| {
                let mut acc = CompensatedSum::new();
                for j in 0..a {
                    acc.add(gram[i * a + j] * c[j]);
                }
                acc.value()
            })
            .collect()
    };
    let total_pairs = a as f64;
    let objective = |fvals: &[f64]| -> f64 {
        let mut acc = CompensatedSum::new();
        for (p, &f) in fvals.iter().enumerate() {
            let u = if pair_sign[p] == 0.0 {
                0.0
            } else {
                -pair_sign[p] * f
            };
            acc.add(cost.value(u));
        }
        acc.value() / total_pairs
    };

    let mut c = vec![0.0f64; a];
    let mut best_c = c.clone();
    let mut best_obj = f64::INFINITY;
    let mut log = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let fvals = matvec(&c);
        // Subgradient of the cost in f, mapped back through K.
        let mut gcoef = vec![0.0f64; a];
        for (p, &f) in fvals.iter().enumerate() {
            if pair_sign[p] == 0.0 {
                continue;
            }
            let u = -pair_sign[p] * f;
            gcoef[p] = cost.right_derivative(u) * (-pair_sign[p]) / total_pairs;
        }
        let grad = matvec(&gcoef);
        let gamma = match config.step_size {
            StepSize::Fixed(g) => g,
            StepSize::InvSqrt(g0) => g0 / ((step + 1) as f64).sqrt(),
        };
        for (ci, gi) in c.iter_mut().zip(&grad) {
            *ci -= gamma * gi;
        }
        // Project onto the ball.
        let fvals = matvec(&c);
        let mut norm2 = crate::numeric::csum(c.iter().zip(&fvals).map(|(ci, fi)| ci * fi));
        if norm2 > config.budget * config.budget {
            let scale = config.budget / norm2.sqrt();
            for ci in c.iter_mut() {
                *ci *= scale;
            }
            norm2 *= scale * scale;
        }
        let obj = objective(&matvec(&c));
        if obj < best_obj {
            best_obj = obj;
            best_c.copy_from_slice(&c);
        }
        log.push(KernelTrace {
            step,
            objective: obj,
            norm2,
        });
    }
    let chosen = match config.keep {
        IterateChoice::Final => c,
        IterateChoice::BestObjective => best_c,
    };
    Ok(KernelResult {
        scorer: ScoringFunction::KernelExpansion {
            kernel,
            anchors,
            coefficients: chosen,
        },
        log,
    })
}

// ---------------------------------------------------------------------------
// Calibration transform
// ---------------------------------------------------------------------------

const ALPHA_RANGE: f64 = 50.0;
const ENVELOPE_TOL: f64 = 1e-10;

/// Optimal conditional surrogate risk
/// `H(rho) = inf_alpha [rho phi(-alpha) + (1-rho) phi(alpha)]`.
pub fn surrogate_envelope(cost: CostFunction, rho: f64) -> f64 {
    let f = |alpha: f64| rho * cost.value(-alpha) + (1.0 - rho) * cost.value(alpha);
    grid_then_golden(f, -ALPHA_RANGE, ALPHA_RANGE, 200, ENVELOPE_TOL).1
}

/// Wrong-sign conditional surrogate risk: the infimum restricted to
/// `alpha (2 rho - 1) <= 0`.
pub fn constrained_envelope(cost: CostFunction, rho: f64) -> f64 {
    let f = |alpha: f64| rho * cost.value(-alpha) + (1.0 - rho) * cost.value(alpha);
    if rho > 0.5 {
        grid_then_golden(f, -ALPHA_RANGE, 0.0, 200, ENVELOPE_TOL).1
    } else if rho < 0.5 {
        grid_then_golden(f, 0.0, ALPHA_RANGE, 200, ENVELOPE_TOL).1
    } else {
        surrogate_envelope(cost, rho)
    }
}

/// Calibration transform `psi(x) = H^-((1+x)/2) - H((1+x)/2)` on [-1, 1]:
/// the conditional regret of answering with the wrong sign. Nonnegative,
/// zero at zero, nondecreasing on [0, 1].
pub fn psi(cost: CostFunction, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::ParamRange(format!("psi argument {x} outside [-1,1]")));
    }
    let rho = (1.0 + x) / 2.0;
    Ok(constrained_envelope(cost, rho) - surrogate_envelope(cost, rho))
}

/// Alternative two-sided form `H^-((1+x)/2) - H^-((1-x)/2)`, retained for
/// comparison. It degenerates to 0 for costs whose wrong-sign envelope is
/// flat (e.g. the hinge), which is why [`psi`] is the operative transform.
pub fn psi_symmetric_form(cost: CostFunction, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::ParamRange(format!("psi argument {x} outside [-1,1]")));
    }
    Ok(constrained_envelope(cost, (1.0 + x) / 2.0)
        - constrained_envelope(cost, (1.0 - x) / 2.0))
}

/// Inverse of [`psi`] on [0, 1] by monotone bisection.
pub fn psi_inverse(cost: CostFunction, u: f64) -> Result<f64> {
    if u < -1e-12 {
        return Err(Error::ParamRange(format!("psi inverse of negative {u}")));
    }
    let u = u.max(0.0);
    let top = psi(cost, 1.0)?;
    if u > top + 1e-9 {
        return Err(Error::ParamRange(format!(
            "{u} outside the transform range [0, {top}]"
        )));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if psi(cost, mid)? < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bound on the excess ranking risk implied by an excess surrogate risk:
/// `psi^{-1}(excess)`, clipped to [0, 1].
pub fn convex_excess_to_rank_bound(a_excess: f64, cost: CostFunction) -> Result<f64> {
    if a_excess < 0.0 {
        return Err(Error::ParamRange(
            "excess surrogate risk must be nonnegative".into(),
        ));
    }
    let top = psi(cost, 1.0)?;
    if a_excess >= top {
        return Ok(1.0);
    }
    psi_inverse(cost, a_excess)
}
