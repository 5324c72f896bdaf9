//! Ranking risks and their exact enumeration oracles.
//!
//! The ranking risk of a rule r is the probability that two independent
//! draws are misordered, `P{Z r(X,X') < 0}` with `Z = (Y - Y')/2`. On
//! models with finite feature support every risk here is computed exactly:
//! bipartite and noiseless-regression label laws are enumerated, and the
//! gaussian label law of noisy regression enters through the closed-form
//! pairwise order probabilities `Phi(Delta)`.
//!
//! Tie conventions, fixed throughout the crate:
//! - score ties rank the first argument higher: `r(x,x') = +1` when
//!   `s(x) >= s(x')`; consequently each score-tied cross-label pair incurs
//!   exactly one mistake out of its two orderings, which reproduces the
//!   half-credit AUC convention exactly (see [`risk_auc_identity`]);
//! - label ties never count: pairs with `Z = 0` contribute no mistake.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledSample, SyntheticModel};
use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, CompensatedSum};
use crate::ustat::PairKernel;

// ---------------------------------------------------------------------------
// Scoring functions and ranking rules
// ---------------------------------------------------------------------------

/// Kernel on pair points `w = (x, x')`, used by kernel expansions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankKernel {
    /// Gaussian on the concatenated pair features,
    /// `exp(-|w - w'|^2 / (2 bandwidth^2))`.
    GaussianPair { bandwidth: f64 },
    /// User-supplied Gram table over fixed pair points (exact feature
    /// match; pairs off the table evaluate to 0). The table must be
    /// symmetric; positive semidefiniteness is the supplier's contract.
    GramTable {
        anchors: Vec<(Vec<f64>, Vec<f64>)>,
        values: Vec<Vec<f64>>,
    },
}

impl RankKernel {
    pub fn eval(&self, w1: (&[f64], &[f64]), w2: (&[f64], &[f64])) -> f64 {
        match self {
            RankKernel::GaussianPair { bandwidth } => {
                let mut d2 = 0.0;
                for (a, b) in w1.0.iter().zip(w2.0) {
                    d2 += (a - b) * (a - b);
                }
                for (a, b) in w1.1.iter().zip(w2.1) {
                    d2 += (a - b) * (a - b);
                }
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            RankKernel::GramTable { anchors, values } => {
                let find = |w: (&[f64], &[f64])| {
                    anchors
                        .iter()
                        .position(|(u, v)| u.as_slice() == w.0 && v.as_slice() == w.1)
                };
                match (find(w1), find(w2)) {
                    (Some(i), Some(j)) => values[i][j],
                    _ => 0.0,
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RankKernel::GaussianPair { bandwidth } => {
                if bandwidth.is_nan() || *bandwidth <= 0.0 {
                    return Err(Error::ParamRange("bandwidth must be positive".into()));
                }
            }
            RankKernel::GramTable { anchors, values } => {
                let k = anchors.len();
                if values.len() != k || values.iter().any(|row| row.len() != k) {
                    return Err(Error::ParamRange("gram table must be square".into()));
                }
                for i in 0..k {
                    for j in 0..k {
                        if !values[i][j].is_finite() {
                            return Err(Error::NonFinite("gram table entry".into()));
                        }
                        if (values[i][j] - values[j][i]).abs() > 1e-12 {
                            return Err(Error::ParamRange(
                                "gram table must be symmetric".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Real-valued scorer. The first three variants score single instances and
/// induce pair scores through the difference `s(x) - s(x')`; the ensemble
/// and kernel-expansion variants score pairs directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScoringFunction {
    /// `s(x) = direction * (+1 if x[dim] >= threshold else -1)`.
    Stump {
        dim: usize,
        threshold: f64,
        direction: i8,
    },
    /// `s(x) = w . x`.
    Linear { weights: Vec<f64> },
    /// Explicit score per support point (exact feature match; points off
    /// the table score 0).
    Table { entries: Vec<(Vec<f64>, f64)> },
    /// Weighted vote of base ranking rules, `f(x,x') = sum w_j g_j(x,x')`.
    Ensemble { members: Vec<(f64, RankingRule)> },
    /// RKHS expansion over anchor pair points,
    /// `f(w) = sum c_a k(anchor_a, w)`.
    KernelExpansion {
        kernel: RankKernel,
        anchors: Vec<(Vec<f64>, Vec<f64>)>,
        coefficients: Vec<f64>,
    },
}

impl ScoringFunction {
    pub fn table_from(entries: Vec<(Vec<f64>, f64)>) -> Self {
        ScoringFunction::Table { entries }
    }

    /// Instance score for the instance-scorer variants.
    pub fn instance_score(&self, x: &[f64]) -> Option<f64> {
        match self {
            ScoringFunction::Stump {
                dim,
                threshold,
                direction,
            } => {
                let side = if x[*dim] >= *threshold { 1.0 } else { -1.0 };
                Some(f64::from(*direction) * side)
            }
            ScoringFunction::Linear { weights } => Some(crate::numeric::csum(
                weights.iter().zip(x).map(|(w, v)| w * v),
            )),
            ScoringFunction::Table { entries } => Some(
                entries
                    .iter()
                    .find(|(p, _)| p.as_slice() == x)
                    .map_or(0.0, |(_, s)| *s),
            ),
            _ => None,
        }
    }

    pub fn is_instance_scorer(&self) -> bool {
        matches!(
            self,
            ScoringFunction::Stump { .. }
                | ScoringFunction::Linear { .. }
                | ScoringFunction::Table { .. }
        )
    }

    /// Antisymmetric pair score: `s(x) - s(x')` for instance scorers, the
    /// direct pair value for ensembles and kernel expansions.
    pub fn pair_score(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ScoringFunction::Ensemble { members } => crate::numeric::csum(
                members
                    .iter()
                    .map(|(w, rule)| w * rule.evaluate(a, b)),
            ),
            ScoringFunction::KernelExpansion {
                kernel,
                anchors,
                coefficients,
            } => crate::numeric::csum(
                anchors
                    .iter()
                    .zip(coefficients)
                    .map(|((u, v), c)| c * kernel.eval((u, v), (a, b))),
            ),
            _ => {
                let sa = self.instance_score(a).expect("instance scorer");
                let sb = self.instance_score(b).expect("instance scorer");
                sa - sb
            }
        }
    }

    /// Instance scores over a dataset; errors for pair-only variants.
    pub fn scores_on(&self, data: &Dataset) -> Result<Vec<f64>> {
        if !self.is_instance_scorer() {
            return Err(Error::ParamRange(
                "instance scores are undefined for pair scorers".into(),
            ));
        }
        Ok(data
            .samples()
            .iter()
            .map(|s| self.instance_score(&s.x).unwrap())
            .collect())
    }
}

type PairRuleFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A ranking rule `r : X x X -> {-1, +1}`; `+1` ranks the first argument
/// higher.
#[derive(Clone)]
pub enum RankingRule {
    /// `r(x,x') = +1` iff the pair score is `>= 0` (score ties rank the
    /// first argument higher).
    FromScorer(ScoringFunction),
    /// The optimal rule of a synthetic model: posterior ordering for
    /// bipartite models, regression-mean ordering otherwise. Evaluation is
    /// defined on the model's support.
    Bayes(SyntheticModel),
    /// Arbitrary evaluator returning ±1.
    PairFunction(PairRuleFn),
}

impl std::fmt::Debug for RankingRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankingRule::FromScorer(s) => f.debug_tuple("FromScorer").field(s).finish(),
            RankingRule::Bayes(_) => f.write_str("Bayes(..)"),
            RankingRule::PairFunction(_) => f.write_str("PairFunction(..)"),
        }
    }
}

impl RankingRule {
    pub fn from_scorer(s: ScoringFunction) -> Self {
        RankingRule::FromScorer(s)
    }

    /// Strict sign rule of a pair scorer: `+1` iff `f(x,x') > 0`, else `-1`
    /// (zeros rank the first argument lower). This is the convention under
    /// which the misranking indicator is dominated pointwise by any
    /// admissible surrogate cost.
    pub fn strict_sign_of(s: ScoringFunction) -> Self {
        RankingRule::PairFunction(Arc::new(move |a, b| {
            if s.pair_score(a, b) > 0.0 {
                1.0
            } else {
                -1.0
            }
        }))
    }

    pub fn pair_function<F>(f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        RankingRule::PairFunction(Arc::new(f))
    }

    /// Evaluate the rule; returns ±1.
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            RankingRule::FromScorer(s) => {
                if s.pair_score(a, b) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            RankingRule::Bayes(model) => {
                let (sa, sb) = match model {
                    SyntheticModel::DiscreteBipartite { .. } => (
                        model.eta_at(a).expect("optimal rule evaluated off support"),
                        model.eta_at(b).expect("optimal rule evaluated off support"),
                    ),
                    _ => (
                        model
                            .mean_at(a)
                            .expect("optimal rule evaluated off support"),
                        model
                            .mean_at(b)
                            .expect("optimal rule evaluated off support"),
                    ),
                };
                if sa >= sb {
                    1.0
                } else {
                    -1.0
                }
            }
            RankingRule::PairFunction(f) => {
                let v = f(a, b);
                debug_assert!(v == 1.0 || v == -1.0, "rules must return ±1");
                v
            }
        }
    }
}

// Manual serde: pair-function rules carry arbitrary closures and are not
// serializable; the other two variants round-trip as tagged objects.
#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RuleSer<'a> {
    FromScorer { scorer: &'a ScoringFunction },
    Bayes { model: &'a SyntheticModel },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RuleDe {
    FromScorer { scorer: ScoringFunction },
    Bayes { model: SyntheticModel },
}

impl Serialize for RankingRule {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RankingRule::FromScorer(s) => RuleSer::FromScorer { scorer: s }.serialize(serializer),
            RankingRule::Bayes(m) => RuleSer::Bayes { model: m }.serialize(serializer),
            RankingRule::PairFunction(_) => Err(serde::ser::Error::custom(
                "pair-function rules are not serializable",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for RankingRule {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match RuleDe::deserialize(deserializer)? {
            RuleDe::FromScorer { scorer } => RankingRule::FromScorer(scorer),
            RuleDe::Bayes { model } => RankingRule::Bayes(model),
        })
    }
}

// ---------------------------------------------------------------------------
// Empirical and true risks
// ---------------------------------------------------------------------------

/// Empirical ranking risk, the U-statistic
/// `(1/(n(n-1))) sum_{i != j} 1{Z_ij r(x_i, x_j) < 0}`.
pub fn empirical_risk(rule: &RankingRule, data: &Dataset) -> Result<f64> {
    data.require_pairs()?;
    let s = data.samples();
    let n = s.len();
    let mut mistakes = 0u64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let z = crate::data::half_label_diff(s[i].y, s[j].y);
            if z == 0.0 {
                continue;
            }
            if z * rule.evaluate(&s[i].x, &s[j].x) < 0.0 {
                mistakes += 1;
            }
        }
    }
    Ok(mistakes as f64 / (n as f64 * (n - 1) as f64))
}

/// Empirical risk of a sample given as (atom, multiplicity) groups; exact
/// algebraic regrouping of [`empirical_risk`] for data whose rows repeat
/// (pairs within a group share the label, so they never count).
pub fn empirical_risk_grouped(rule: &RankingRule, groups: &[(LabeledSample, usize)]) -> Result<f64> {
    let n: usize = groups.iter().map(|(_, c)| c).sum();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let mut acc = CompensatedSum::new();
    for (a, ca) in groups {
        for (b, cb) in groups {
            if std::ptr::eq(a, b) {
                continue;
            }
            let z = crate::data::half_label_diff(a.y, b.y);
            if z == 0.0 {
                continue;
            }
            if z * rule.evaluate(&a.x, &b.x) < 0.0 {
                acc.add((*ca as f64) * (*cb as f64));
            }
        }
    }
    Ok(acc.value() / (n as f64 * (n - 1) as f64))
}

/// Probability that the ordered pair `(atom k, atom l)` is misordered by a
/// rule answering `r_val` on it.
fn pair_mistake_prob(model: &SyntheticModel, k: usize, l: usize, r_val: f64) -> f64 {
    match model {
        SyntheticModel::DiscreteBipartite { etas, .. } => {
            let (ek, el) = (etas[k], etas[l]);
            // P(Z>0) = eta_k (1 - eta_l), P(Z<0) = eta_l (1 - eta_k).
            if r_val > 0.0 {
                el * (1.0 - ek)
            } else {
                ek * (1.0 - el)
            }
        }
        SyntheticModel::NoiselessRegression { means, .. } => {
            let z = means[k] - means[l];
            f64::from(z * r_val < 0.0)
        }
        SyntheticModel::NoisyRegression { means, sds, .. } => {
            let d = (means[k] - means[l]) / (sds[k] * sds[k] + sds[l] * sds[l]).sqrt();
            // P(Z>0) = Phi(d); ties have zero probability.
            if r_val > 0.0 {
                normal_cdf(-d)
            } else {
                normal_cdf(d)
            }
        }
    }
}

/// Optimal answer on the ordered atom pair (k, l): posterior or mean
/// ordering with ties ranked `+1`.
fn bayes_pair_value(model: &SyntheticModel, k: usize, l: usize) -> f64 {
    let (a, b) = match model {
        SyntheticModel::DiscreteBipartite { etas, .. } => (etas[k], etas[l]),
        SyntheticModel::NoiselessRegression { means, .. }
        | SyntheticModel::NoisyRegression { means, .. } => (means[k], means[l]),
    };
    if a >= b {
        1.0
    } else {
        -1.0
    }
}

/// Exact ranking risk `P{Z r(X,X') < 0}` by enumeration over the support
/// (coincident draws included).
pub fn true_risk(rule: &RankingRule, model: &SyntheticModel) -> Result<f64> {
    model.validate()?;
    let points = model.points();
    let probs = model.probs();
    let mut acc = CompensatedSum::new();
    for k in 0..points.len() {
        for l in 0..points.len() {
            let w = probs[k] * probs[l];
            if w == 0.0 {
                continue;
            }
            let r_val = rule.evaluate(&points[k], &points[l]);
            acc.add(w * pair_mistake_prob(model, k, l, r_val));
        }
    }
    Ok(acc.value())
}

/// The risk-optimal reference rule of a model.
pub fn bayes_rule(model: &SyntheticModel) -> RankingRule {
    RankingRule::Bayes(model.clone())
}

/// Both exact closed forms of the optimal bipartite risk:
/// `E min(eta, eta') - (E eta)^2` and `p(1-p) - (1/2) E|eta - eta'|`.
pub fn bayes_risk_bipartite_forms(model: &SyntheticModel) -> Result<(f64, f64)> {
    model.validate()?;
    let SyntheticModel::DiscreteBipartite { probs, etas, .. } = model else {
        return Err(Error::InvalidModel("bipartite model required".into()));
    };
    let p = model.positive_rate()?;
    let mut emin = CompensatedSum::new();
    let mut gini = CompensatedSum::new();
    for (k, (&pk, &ek)) in probs.iter().zip(etas).enumerate() {
        let _ = k;
        for (&pl, &el) in probs.iter().zip(etas) {
            emin.add(pk * pl * ek.min(el));
            gini.add(pk * pl * (ek - el).abs());
        }
    }
    let min_form = emin.value() - p * p;
    let gini_form = p * (1.0 - p) - 0.5 * gini.value();
    Ok((min_form, gini_form))
}

/// Optimal ranking risk of a model, dispatched by variant. The bipartite
/// value is cross-checked against its second closed form to 1e-12.
pub fn bayes_risk(model: &SyntheticModel) -> Result<f64> {
    model.validate()?;
    match model {
        SyntheticModel::DiscreteBipartite { .. } => {
            let (min_form, gini_form) = bayes_risk_bipartite_forms(model)?;
            if (min_form - gini_form).abs() > 1e-12 {
                return Err(Error::Numerical(format!(
                    "optimal-risk closed forms disagree: {min_form} vs {gini_form}"
                )));
            }
            Ok(min_form)
        }
        SyntheticModel::NoiselessRegression { .. } => Ok(0.0),
        SyntheticModel::NoisyRegression {
            probs, means, sds, ..
        } => {
            let mut acc = CompensatedSum::new();
            for k in 0..probs.len() {
                for l in 0..probs.len() {
                    let d = (means[k] - means[l])
                        / (sds[k] * sds[k] + sds[l] * sds[l]).sqrt();
                    acc.add(probs[k] * probs[l] * normal_cdf(-d.abs()));
                }
            }
            Ok(acc.value())
        }
    }
}

/// Exact excess ranking risk of the rule induced by a scorer (score ties
/// rank `+1`): the ordered-pair regret against the optimal answer,
/// enumerated over the support. Equals
/// `true_risk(FromScorer(s)) - bayes_risk` to 1e-12.
pub fn excess_risk(scorer: &ScoringFunction, model: &SyntheticModel) -> Result<f64> {
    model.validate()?;
    let points = model.points();
    let probs = model.probs();
    let mut acc = CompensatedSum::new();
    for k in 0..points.len() {
        for l in 0..points.len() {
            let w = probs[k] * probs[l];
            if w == 0.0 {
                continue;
            }
            let r_s = if scorer.pair_score(&points[k], &points[l]) >= 0.0 {
                1.0
            } else {
                -1.0
            };
            let r_star = bayes_pair_value(model, k, l);
            if r_s != r_star {
                let regret = pair_mistake_prob(model, k, l, r_s)
                    - pair_mistake_prob(model, k, l, r_star);
                acc.add(w * regret);
            }
        }
    }
    Ok(acc.value())
}

// ---------------------------------------------------------------------------
// Mistake kernels and the projection variance
// ---------------------------------------------------------------------------

/// The misranking indicator of a rule as a symmetric pair kernel:
/// `(1/2)[1{(y-y') r(x,x') < 0} + 1{(y'-y) r(x',x) < 0}]`. Symmetrization
/// leaves every U-statistic value unchanged and is exact for rules without
/// score ties.
pub fn mistake_kernel(rule: RankingRule) -> PairKernel {
    PairKernel::symmetrized(move |a: &LabeledSample, b: &LabeledSample| {
        let z = crate::data::half_label_diff(a.y, b.y);
        if z == 0.0 {
            0.0
        } else {
            f64::from(z * rule.evaluate(&a.x, &b.x) < 0.0)
        }
    })
}

/// Excess kernel of a rule against the model's optimal rule,
/// `mistake(r) - mistake(r*)`, symmetrized.
pub fn excess_kernel(rule: RankingRule, model: &SyntheticModel) -> Result<PairKernel> {
    model.validate()?;
    let star = bayes_rule(model);
    Ok(PairKernel::symmetrized(
        move |a: &LabeledSample, b: &LabeledSample| {
            let z = crate::data::half_label_diff(a.y, b.y);
            if z == 0.0 {
                0.0
            } else {
                f64::from(z * rule.evaluate(&a.x, &b.x) < 0.0)
                    - f64::from(z * star.evaluate(&a.x, &b.x) < 0.0)
            }
        },
    ))
}

/// Variance of the first Hoeffding projection of the excess kernel of the
/// scorer-induced rule. Exact by enumeration when the joint support is
/// finite; for noisy regression the outer label integral is evaluated by
/// fixed-grid Simpson quadrature over the gaussian noise (absolute accuracy
/// well below 1e-9 for these bounded smooth integrands).
pub fn projection_variance(scorer: &ScoringFunction, model: &SyntheticModel) -> Result<f64> {
    model.validate()?;
    match model {
        SyntheticModel::NoisyRegression { .. } => {
            projection_variance_noisy(scorer, model)
        }
        _ => {
            let q = excess_kernel(
                RankingRule::from_scorer(scorer.clone()),
                model,
            )?;
            crate::ustat::conditional_variance(&q, model)
        }
    }
}

fn projection_variance_noisy(scorer: &ScoringFunction, model: &SyntheticModel) -> Result<f64> {
    let SyntheticModel::NoisyRegression {
        points,
        probs,
        means,
        sds,
    } = model
    else {
        unreachable!()
    };
    let m = points.len();
    // Rule disagreement tables, both argument orders.
    let r_s = |k: usize, l: usize| -> f64 {
        if scorer.pair_score(&points[k], &points[l]) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    };
    let lambda = excess_risk(scorer, model)?;
    // h(x_k, y) = (1/2)[E q((x_k,y), (X',Y')) + E q((X',Y'), (x_k,y))] - lambda,
    // with each conditional expectation in closed form: for a disagreeing
    // atom pair the indicator difference integrates to ±(2 Phi((y-m_l)/sd_l) - 1).
    let h = |k: usize, y: f64| -> f64 {
        let mut acc = CompensatedSum::new();
        for l in 0..m {
            let phi_term = 2.0 * normal_cdf((y - means[l]) / sds[l]) - 1.0;
            // First argument order: q((x_k, y), (x_l, Y')).
            let (rs, rb) = (r_s(k, l), bayes_pair_value(model, k, l));
            if rs != rb {
                // rs = -1, rb = +1 contributes +phi_term; the flip, -phi_term.
                acc.add(probs[l] * if rs < rb { phi_term } else { -phi_term });
            }
            // Second argument order: q((x_l, Y'), (x_k, y)); the indicator
            // 1{(Y'-y) r(x_l,x_k) < 0} integrates to Phi or 1-Phi.
            let (rs2, rb2) = (r_s(l, k), bayes_pair_value(model, l, k));
            if rs2 != rb2 {
                // difference of mistake indicators for opposite rule answers:
                // rule +1 errs when Y' < y (prob Phi), rule -1 errs when Y' > y.
                acc.add(probs[l] * if rs2 > rb2 { phi_term } else { -phi_term });
            }
        }
        0.5 * acc.value() - lambda
    };
    // Var h = E_X E_eps h(X, m(X) + sd(X) eps)^2 (the projection is centered).
    const HALF_RANGE: f64 = 8.5;
    const STEPS: usize = 2000; // Simpson intervals (even)
    let dt = 2.0 * HALF_RANGE / STEPS as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut var = CompensatedSum::new();
    for k in 0..m {
        if probs[k] == 0.0 {
            continue;
        }
        let f = |t: f64| -> f64 {
            let y = means[k] + sds[k] * t;
            let hv = h(k, y);
            hv * hv * norm * (-0.5 * t * t).exp()
        };
        let mut acc = f(-HALF_RANGE) + f(HALF_RANGE);
        for i in 1..STEPS {
            let t = -HALF_RANGE + dt * i as f64;
            acc += f(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        var.add(probs[k] * acc * dt / 3.0);
    }
    Ok(var.value())
}

// ---------------------------------------------------------------------------
// Noise condition diagnostics
// ---------------------------------------------------------------------------

/// Result of a noise-condition constant evaluation.
///
/// `value` is the supremum over support points of the conditional
/// expectation with zero-difference atoms excluded. On a finite support the
/// integrand is infinite with positive probability whenever the comparison
/// quantity has an atom at the evaluation point, so the strict value of the
/// condition is then `+inf`: `atom_collision` reports that, with
/// `collision_mass` the largest colliding probability mass over evaluation
/// points.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseConstant {
    pub value: f64,
    pub atom_collision: bool,
    pub collision_mass: f64,
}

/// Noise-condition constant `sup_x E|g(x) - g(X')|^(-alpha)` where `g` is
/// the posterior for bipartite models and the standardized mean gap for
/// noisy regression.
pub fn noise_constant(model: &SyntheticModel, alpha: f64) -> Result<NoiseConstant> {
    model.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ParamRange(format!("alpha {alpha} outside [0,1]")));
    }
    if alpha == 0.0 {
        return Ok(NoiseConstant {
            value: 1.0,
            atom_collision: false,
            collision_mass: 0.0,
        });
    }
    let probs = model.probs();
    let k_count = probs.len();
    let gap = |k: usize, l: usize| -> f64 {
        match model {
            SyntheticModel::DiscreteBipartite { etas, .. } => (etas[k] - etas[l]).abs(),
            SyntheticModel::NoisyRegression { means, sds, .. } => {
                ((means[k] - means[l]) / (sds[k] * sds[k] + sds[l] * sds[l]).sqrt()).abs()
            }
            SyntheticModel::NoiselessRegression { .. } => f64::NAN,
        }
    };
    if matches!(model, SyntheticModel::NoiselessRegression { .. }) {
        return Err(Error::InvalidModel(
            "noise-condition constants are defined for bipartite and noisy-regression models"
                .into(),
        ));
    }
    let mut value = 0.0f64;
    let mut collision_mass = 0.0f64;
    for k in 0..k_count {
        let mut acc = CompensatedSum::new();
        let mut mass_here = 0.0;
        for (l, &pl) in probs.iter().enumerate() {
            if pl == 0.0 {
                continue;
            }
            let g = gap(k, l);
            if g == 0.0 {
                mass_here += pl;
            } else {
                acc.add(pl * g.powf(-alpha));
            }
        }
        value = value.max(acc.value());
        collision_mass = collision_mass.max(mass_here);
    }
    Ok(NoiseConstant {
        value,
        atom_collision: collision_mass > 0.0,
        collision_mass,
    })
}

/// Standardized mean gap of a noisy regression model,
/// `(m(x) - m(x')) / sqrt(sd(x)^2 + sd(x')^2)`; antisymmetric.
pub fn delta(model: &SyntheticModel, x: &[f64], x_prime: &[f64]) -> Result<f64> {
    model.validate()?;
    if !matches!(model, SyntheticModel::NoisyRegression { .. }) {
        return Err(Error::InvalidModel("noisy regression model required".into()));
    }
    let look = |p: &[f64]| -> Result<(f64, f64)> {
        let m = model
            .mean_at(p)
            .ok_or_else(|| Error::InvalidModel("point off the model support".into()))?;
        let s = model.sd_at(p).unwrap();
        Ok((m, s))
    };
    let (ma, sa) = look(x)?;
    let (mb, sb) = look(x_prime)?;
    Ok((ma - mb) / (sa * sa + sb * sb).sqrt())
}

/// Mean absolute posterior gap `E|eta(X) - eta(X')|`, a concentration
/// measure of the posterior law: 0 iff the posterior is constant on the
/// support.
pub fn gini_mean_difference(model: &SyntheticModel) -> Result<f64> {
    model.validate()?;
    let SyntheticModel::DiscreteBipartite { probs, etas, .. } = model else {
        return Err(Error::InvalidModel("bipartite model required".into()));
    };
    let mut acc = CompensatedSum::new();
    for (&pk, &ek) in probs.iter().zip(etas) {
        for (&pl, &el) in probs.iter().zip(etas) {
            acc.add(pk * pl * (ek - el).abs());
        }
    }
    Ok(acc.value())
}

// ---------------------------------------------------------------------------
// ROC and AUC
// ---------------------------------------------------------------------------

/// A ROC curve as an ordered vertex list from (0,0) to (1,1), both
/// coordinates nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false positive rate, true positive rate) vertices.
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn validate(&self) -> Result<()> {
        let pts = &self.points;
        if pts.len() < 2 || pts[0] != (0.0, 0.0) {
            return Err(Error::Numerical("curve must start at (0,0)".into()));
        }
        let last = pts[pts.len() - 1];
        if (last.0 - 1.0).abs() > 1e-12 || (last.1 - 1.0).abs() > 1e-12 {
            return Err(Error::Numerical("curve must end at (1,1)".into()));
        }
        for w in pts.windows(2) {
            if w[1].0 < w[0].0 - 1e-15 || w[1].1 < w[0].1 - 1e-15 {
                return Err(Error::Numerical("curve must be nondecreasing".into()));
            }
        }
        Ok(())
    }

    /// Area under the vertex polyline (trapezoid rule). For curves built
    /// here this equals the half-tie-credit pair probability.
    pub fn auc(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for w in self.points.windows(2) {
            acc.add((w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5);
        }
        acc.value()
    }

    /// Power at a false-positive level by linear interpolation between
    /// vertices (the randomized-threshold power function).
    pub fn interpolated_tpr(&self, fpr: f64) -> f64 {
        let pts = &self.points;
        if fpr <= 0.0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            if fpr <= w[1].0 {
                let (a, b) = (w[0], w[1]);
                if b.0 - a.0 <= 0.0 {
                    return b.1;
                }
                let t = (fpr - a.0) / (b.0 - a.0);
                return a.1 + t * (b.1 - a.1);
            }
        }
        pts[pts.len() - 1].1
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            out.push_str(&format!("{f},{t}\n"));
        }
        out
    }
}

fn split_classes(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    let neg = labels.iter().filter(|&&y| y < 0.0).count();
    if pos + neg != labels.len() {
        return Err(Error::ParamRange("labels must be ±1".into()));
    }
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass { pos, neg });
    }
    Ok((pos, neg))
}

/// Empirical ROC curve: descending sweep over the distinct score values,
/// one vertex after each tied group.
pub fn roc_curve(scores: &[f64], labels: &[f64]) -> Result<RocCurve> {
    let (pos, neg) = split_classes(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] > 0.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        i = j;
    }
    let curve = RocCurve { points };
    curve.validate()?;
    Ok(curve)
}

/// Exact ROC curve of an instance scorer under a bipartite model, from the
/// class-conditional feature laws obtained by posterior inversion.
pub fn true_roc(model: &SyntheticModel, scorer: &ScoringFunction) -> Result<RocCurve> {
    model.validate()?;
    let SyntheticModel::DiscreteBipartite {
        points: xs,
        probs,
        etas,
    } = model
    else {
        return Err(Error::InvalidModel("bipartite model required".into()));
    };
    if !scorer.is_instance_scorer() {
        return Err(Error::ParamRange(
            "exact curves need an instance scorer".into(),
        ));
    }
    let p = model.positive_rate()?;
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::SingleClass {
            pos: usize::from(p > 0.0),
            neg: usize::from(p < 1.0),
        });
    }
    // Class-conditional masses per support point.
    let mut entries: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(probs)
        .zip(etas)
        .map(|((x, &pk), &ek)| {
            let s = scorer.instance_score(x).unwrap();
            (s, pk * ek / p, pk * (1.0 - ek) / (1.0 - p))
        })
        .collect();
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = CompensatedSum::new();
    let mut fp = CompensatedSum::new();
    let mut i = 0;
    while i < entries.len() {
        let mut j = i;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            tp.add(entries[j].1);
            fp.add(entries[j].2);
            j += 1;
        }
        points.push((fp.value().min(1.0), tp.value().min(1.0)));
        i = j;
    }
    // Close the curve exactly.
    let last = points.len() - 1;
    points[last] = (1.0, 1.0);
    let curve = RocCurve { points };
    curve.validate()?;
    Ok(curve)
}

/// True whether `optimal` dominates `other` at every achievable level: at
/// each vertex of `other`, the interpolated power of `optimal` is at least
/// the vertex power (within `tol`). The optimal curve is concave, so its
/// interpolation is exactly the randomized-threshold power function.
pub fn roc_dominates(optimal: &RocCurve, other: &RocCurve, tol: f64) -> bool {
    other
        .points
        .iter()
        .all(|&(fpr, tpr)| optimal.interpolated_tpr(fpr) >= tpr - tol)
}

/// Rank-based AUC with half credit for ties (midranks), `O(n log n)`.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = split_classes(scores, labels)?;
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // Midranks over tied groups (1-based ranks).
    let mut rank_sum_pos = CompensatedSum::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if labels[k] > 0.0 {
                rank_sum_pos.add(midrank);
            }
        }
        i = j;
    }
    let np = pos as f64;
    let nn = neg as f64;
    Ok((rank_sum_pos.value() - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Brute-force pair-counting AUC oracle:
/// (concordant + ties/2) / (n+ n-), `O(n^2)`.
pub fn auc_brute(scores: &[f64], labels: &[f64]) -> Result<f64> {
    split_classes(scores, labels)?;
    let n = scores.len();
    let mut concordant = 0u64;
    let mut tied = 0u64;
    for i in 0..n {
        if labels[i] <= 0.0 {
            continue;
        }
        for j in 0..n {
            if labels[j] >= 0.0 {
                continue;
            }
            if scores[i] > scores[j] {
                concordant += 1;
            } else if scores[i] == scores[j] {
                tied += 1;
            }
        }
    }
    let np = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let nn = labels.iter().filter(|&&y| y < 0.0).count() as f64;
    Ok((concordant as f64 + tied as f64 / 2.0) / (np * nn))
}

/// Exact population AUC of an instance scorer on a bipartite model
/// (trapezoid area of the exact curve; half credit at score ties).
pub fn true_auc(model: &SyntheticModel, scorer: &ScoringFunction) -> Result<f64> {
    Ok(true_roc(model, scorer)?.auc())
}

/// Joint report of the empirical risk / AUC identity
/// `L_n = 2 n+ n- (1 - AUC_n) / (n(n-1))` for a scorer on a ±1-labeled
/// dataset. The residual is exactly 0 in exact arithmetic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RiskAucIdentity {
    pub empirical_risk: f64,
    pub auc: f64,
    pub residual: f64,
}

pub fn risk_auc_identity(data: &Dataset, scorer: &ScoringFunction) -> Result<RiskAucIdentity> {
    data.require_pairs()?;
    let scores = scorer.scores_on(data)?;
    let labels: Vec<f64> = data.labels().collect();
    let (pos, neg) = split_classes(&scores, &labels)?;
    let l_n = empirical_risk(&RankingRule::from_scorer(scorer.clone()), data)?;
    let a = auc(&scores, &labels)?;
    let n = data.n() as f64;
    let rhs = 2.0 * pos as f64 * neg as f64 * (1.0 - a) / (n * (n - 1.0));
    Ok(RiskAucIdentity {
        empirical_risk: l_n,
        auc: a,
        residual: (l_n - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery;
    use crate::rng::RngSeed;
    use rand::Rng;

    fn m1() -> SyntheticModel {
        battery::three_atom_bipartite()
    }

    fn dataset(rows: &[(f64, f64)]) -> Dataset {
        Dataset::from_samples(
            rows.iter()
                .map(|&(x, y)| LabeledSample::new(vec![x], y))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empirical_risk_four_sample_example() {
        // scores (0.9, 0.8, 0.7, 0.6), labels (+,-,+,-): one discordant
        // cross pair -> 2/(4*3) = 1/6.
        let ds = dataset(&[(0.9, 1.0), (0.8, -1.0), (0.7, 1.0), (0.6, -1.0)]);
        let s = ScoringFunction::Linear { weights: vec![1.0] };
        let r = RankingRule::from_scorer(s);
        let l = empirical_risk(&r, &ds).unwrap();
        assert!((l - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn separable_data_zero_risk_and_equal_labels_zero() {
        let ds = dataset(&[(3.0, 1.0), (2.0, 1.0), (1.0, -1.0), (0.0, -1.0)]);
        let r = RankingRule::from_scorer(ScoringFunction::Linear { weights: vec![1.0] });
        assert_eq!(empirical_risk(&r, &ds).unwrap(), 0.0);
        let all_same = dataset(&[(1.0, 2.0), (5.0, 2.0), (2.0, 2.0)]);
        assert_eq!(empirical_risk(&r, &all_same).unwrap(), 0.0);
    }

    #[test]
    fn grouped_risk_matches_plain() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            probs: vec![0.25; 4],
            means: vec![0.0, 2.0, 1.0, 3.0],
        };
        let ds = m.sample(60, RngSeed(4)).unwrap();
        let mut groups: Vec<(LabeledSample, usize)> = Vec::new();
        for s in ds.samples() {
            match groups.iter_mut().find(|(g, _)| g == s) {
                Some((_, c)) => *c += 1,
                None => groups.push((s.clone(), 1)),
            }
        }
        let r = RankingRule::from_scorer(ScoringFunction::Stump {
            dim: 0,
            threshold: 1.5,
            direction: 1,
        });
        let a = empirical_risk(&r, &ds).unwrap();
        let b = empirical_risk_grouped(&r, &groups).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bayes_risk_m1_both_forms() {
        let (min_form, gini_form) = bayes_risk_bipartite_forms(&m1()).unwrap();
        assert!((min_form - 0.0975).abs() < 1e-15, "min form {min_form}");
        assert!((gini_form - 0.0975).abs() < 1e-15, "gini form {gini_form}");
        assert!((bayes_risk(&m1()).unwrap() - 0.0975).abs() < 1e-15);
        // and the optimal rule achieves it
        let l = true_risk(&bayes_rule(&m1()), &m1()).unwrap();
        assert!((l - 0.0975).abs() < 1e-12);
    }

    #[test]
    fn constant_scorer_risk_is_p_one_minus_p() {
        let s = ScoringFunction::Table { entries: vec![] }; // scores 0 everywhere
        let r = RankingRule::from_scorer(s);
        let l = true_risk(&r, &m1()).unwrap();
        assert!((l - 0.2475).abs() < 1e-15, "got {l}");
    }

    #[test]
    fn single_point_model_zero_risk() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![0.0]],
            probs: vec![1.0],
            means: vec![1.0],
        };
        let r = RankingRule::pair_function(|_, _| -1.0);
        assert_eq!(true_risk(&r, &m).unwrap(), 0.0);
    }

    #[test]
    fn constant_eta_any_rule_risk_p_one_minus_p() {
        let m = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            etas: vec![0.3, 0.3],
        };
        let l = true_risk(&bayes_rule(&m), &m).unwrap();
        assert!((l - 0.21).abs() < 1e-15);
        assert!((bayes_risk(&m).unwrap() - 0.21).abs() < 1e-15);
    }

    #[test]
    fn bayes_rule_orderings() {
        let m = m1();
        let r = bayes_rule(&m);
        assert_eq!(r.evaluate(&[2.0], &[1.0]), 1.0);
        assert_eq!(r.evaluate(&[1.0], &[2.0]), -1.0);
        assert_eq!(r.evaluate(&[1.0], &[0.0]), 1.0);
        assert_eq!(r.evaluate(&[0.0], &[0.0]), 1.0); // tie -> +1
        let reg = SyntheticModel::NoiselessRegression {
            points: vec![vec![1.0], vec![2.0], vec![3.0]],
            probs: vec![1.0 / 3.0; 3],
            means: vec![1.0, 2.0, 3.0],
        };
        let rr = bayes_rule(&reg);
        assert_eq!(rr.evaluate(&[3.0], &[1.0]), 1.0);
        assert_eq!(rr.evaluate(&[1.0], &[3.0]), -1.0);
    }

    #[test]
    fn noiseless_bayes_risk_zero() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![0.0], vec![1.0], vec![2.0]],
            probs: vec![0.2, 0.3, 0.5],
            means: vec![0.5, -0.25, 2.0],
        };
        assert_eq!(bayes_risk(&m).unwrap(), 0.0);
        assert!(true_risk(&bayes_rule(&m), &m).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eta_half_maximal_bayes_risk() {
        let m = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            etas: vec![0.5, 0.5],
        };
        assert!((bayes_risk(&m).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn excess_risk_matches_risk_difference() {
        let m = m1();
        // Optimal-table scorer: zero excess.
        let opt = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.5),
            (vec![2.0], 0.9),
        ]);
        assert!(excess_risk(&opt, &m).unwrap().abs() < 1e-15);
        // Swap the top two atoms: excess 2 * 0.25*0.25 * |0.9-0.5| = 0.05.
        let rev = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.9),
            (vec![2.0], 0.5),
        ]);
        let e = excess_risk(&rev, &m).unwrap();
        assert!((e - 0.05).abs() < 1e-15, "got {e}");
        let direct = true_risk(&RankingRule::from_scorer(rev.clone()), &m).unwrap()
            - bayes_risk(&m).unwrap();
        assert!((e - direct).abs() < 1e-12);
        // Constant scorer: ties rank +1 everywhere, excess = 0.2475 - 0.0975.
        let flat = ScoringFunction::Table { entries: vec![] };
        let e_flat = excess_risk(&flat, &m).unwrap();
        assert!((e_flat - 0.15).abs() < 1e-12, "got {e_flat}");
    }

    #[test]
    fn excess_risk_consistency_battery() {
        let mut rng = battery::rng(31);
        for _ in 0..40 {
            let m = battery::random_bipartite(&mut rng, 6);
            let s = ScoringFunction::table_from(battery::random_table_scores(&mut rng, &m));
            let e = excess_risk(&s, &m).unwrap();
            let d = true_risk(&RankingRule::from_scorer(s), &m).unwrap() - bayes_risk(&m).unwrap();
            assert!((e - d).abs() < 1e-12, "excess {e} vs difference {d}");
            assert!(e >= -1e-15);
        }
    }

    #[test]
    fn bayes_optimality_battery() {
        // No table rule beats the posterior ordering, on random models.
        let mut rng = battery::rng(40);
        for _ in 0..8 {
            let m = battery::random_bipartite(&mut rng, 5);
            let l_star = bayes_risk(&m).unwrap();
            for _ in 0..100 {
                let s = ScoringFunction::table_from(battery::random_table_scores(&mut rng, &m));
                let l = true_risk(&RankingRule::from_scorer(s), &m).unwrap();
                assert!(l >= l_star - 1e-12);
            }
            // and the optimal risk is within the variance bound
            let p = m.positive_rate().unwrap();
            assert!(l_star <= p * (1.0 - p) + 1e-15);
            assert!(l_star <= 0.25 + 1e-15);
        }
    }

    #[test]
    fn projection_variance_zero_for_optimal_scorer() {
        let m = m1();
        let opt = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.5),
            (vec![2.0], 0.9),
        ]);
        assert!(projection_variance(&opt, &m).unwrap().abs() < 1e-24);
    }

    #[test]
    fn projection_variance_noiseless_bounded_by_excess() {
        // With exact labels the variance of the projection never exceeds the
        // excess risk (the alpha = 1 regime).
        let mut rng = battery::rng(55);
        for _ in 0..20 {
            let m = battery::random_noiseless(&mut rng, 5);
            let s = ScoringFunction::table_from(battery::random_table_scores(&mut rng, &m));
            let v = projection_variance(&s, &m).unwrap();
            let e = excess_risk(&s, &m).unwrap();
            assert!(v <= e + 1e-12, "variance {v} above excess {e}");
        }
    }

    #[test]
    fn projection_variance_reversed_scorer_positive() {
        let m = m1();
        let rev = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.9),
            (vec![2.0], 0.5),
        ]);
        let v = projection_variance(&rev, &m).unwrap();
        assert!(v > 1e-6, "expected a positive projection variance, got {v}");
        // Recorded comparison against the variance-vs-regret bound with the
        // measured constants (alpha = 1/2 and the collision-excluded finite
        // part of the noise constant; the strict constant is infinite here,
        // which makes the strict bound vacuous).
        let alpha = 0.5;
        let c = noise_constant(&m, alpha).unwrap();
        assert!(c.atom_collision);
        let e = excess_risk(&rev, &m).unwrap();
        assert!(
            v <= c.value * e.powf(alpha) + 1e-12,
            "variance {v} above the measured-constant bound {}",
            c.value * e.powf(alpha)
        );
    }

    #[test]
    fn noise_constant_basics() {
        let m = m1();
        let nc0 = noise_constant(&m, 0.0).unwrap();
        assert_eq!(nc0.value, 1.0);
        assert!(!nc0.atom_collision);
        // alpha = 1/2: every support point collides with itself, so the
        // strict value is infinite; the finite part is the worst point's
        // collision-excluded sum, attained at eta = 0.5.
        let nc = noise_constant(&m, 0.5).unwrap();
        assert!(nc.atom_collision);
        assert!(nc.collision_mass >= 0.25);
        let expect = 0.5 * 0.3f64.powf(-0.5) + 0.25 * 0.4f64.powf(-0.5);
        assert!((nc.value - expect).abs() < 1e-12, "got {}", nc.value);
        assert!(noise_constant(&m, 1.5).is_err());
    }

    #[test]
    fn noise_constant_spread_posterior_below_density_bound() {
        // Posterior uniform over [0.1, 0.9] on 512 atoms: the density-bound
        // form 2B/eps with B = 1.25, eps = 0.2 dominates the finite part.
        let m = battery::uniform_eta_bipartite(512, 0.1, 0.9);
        let nc = noise_constant(&m, 0.8).unwrap();
        assert!(nc.atom_collision); // self-atoms always collide
        assert!(nc.value <= 12.5, "value {} above 2B/eps", nc.value);
    }

    #[test]
    fn delta_properties() {
        let m = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            means: vec![1.0, 3.0],
            sds: vec![1.0, 1.0],
        };
        assert_eq!(delta(&m, &[0.0], &[0.0]).unwrap(), 0.0);
        let d = delta(&m, &[0.0], &[1.0]).unwrap();
        assert!((d + 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            delta(&m, &[0.0], &[1.0]).unwrap(),
            -delta(&m, &[1.0], &[0.0]).unwrap()
        );
        // scaling both sds by t scales |Delta| by 1/t
        let m2 = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            means: vec![1.0, 3.0],
            sds: vec![2.0, 2.0],
        };
        let d2 = delta(&m2, &[0.0], &[1.0]).unwrap();
        assert!((d2 - d / 2.0).abs() < 1e-15);
    }

    #[test]
    fn noisy_bayes_risk_closed_form() {
        let m = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            means: vec![0.0, 1.0],
            sds: vec![1.0, 1.0],
        };
        // L* = sum p_k p_l Phi(-|Delta_kl|): diagonal gives 2 * 0.25 * 0.5,
        // off-diagonal 2 * 0.25 * Phi(-1/sqrt(2)).
        let expect = 0.25 + 0.5 * normal_cdf(-1.0 / 2.0f64.sqrt());
        let got = bayes_risk(&m).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((true_risk(&bayes_rule(&m), &m).unwrap() - got).abs() < 1e-12);
    }

    #[test]
    fn noisy_projection_variance_bound() {
        // Var(h_s) <= (2 Phi(c) - 1) * excess^alpha with the collision-free
        // finite part of the noise constant.
        let m = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            probs: vec![0.25; 4],
            means: vec![0.0, 0.8, 1.7, 2.1],
            sds: vec![0.6, 0.9, 0.7, 1.1],
        };
        let alpha = 0.5;
        let c = noise_constant(&m, alpha).unwrap();
        let factor = 2.0 * normal_cdf(c.value) - 1.0;
        let mut rng = battery::rng(71);
        for _ in 0..10 {
            let s = ScoringFunction::table_from(battery::random_table_scores(&mut rng, &m));
            let v = projection_variance(&s, &m).unwrap();
            let e = excess_risk(&s, &m).unwrap();
            assert!(v >= -1e-12);
            assert!(
                v <= factor * e.powf(alpha) + 1e-9,
                "v {v} vs bound {}",
                factor * e.powf(alpha)
            );
        }
    }

    #[test]
    fn gini_values() {
        assert!((gini_mean_difference(&m1()).unwrap() - 0.3).abs() < 1e-15);
        let flat = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            etas: vec![0.4, 0.4],
        };
        assert_eq!(gini_mean_difference(&flat).unwrap(), 0.0);
        // Deterministic labels eta in {0,1} with P(eta=1) = p: the mean
        // absolute gap is 2p(1-p) by direct computation.
        let p = 0.3;
        let det = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![1.0 - p, p],
            etas: vec![0.0, 1.0],
        };
        let g = gini_mean_difference(&det).unwrap();
        assert!((g - 2.0 * p * (1.0 - p)).abs() < 1e-15);
    }

    #[test]
    fn roc_perfect_constant_and_exact() {
        // Perfect separation passes through (0,1).
        let c = roc_curve(&[1.0, 1.0, -1.0], &[1.0, 1.0, -1.0]).unwrap();
        assert!(c.points.contains(&(0.0, 1.0)));
        assert!((c.auc() - 1.0).abs() < 1e-15);
        // Constant scores: two points, the diagonal segment.
        let c2 = roc_curve(&[0.5, 0.5, 0.5, 0.5], &[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(c2.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!((c2.auc() - 0.5).abs() < 1e-15);
        // Exact curve on the three-atom fixture under the posterior scorer:
        // 4 vertices from 3 distinct thresholds.
        let opt = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.5),
            (vec![2.0], 0.9),
        ]);
        let exact = true_roc(&m1(), &opt).unwrap();
        assert_eq!(exact.points.len(), 4);
        exact.validate().unwrap();
        // vertices: after eta=.9 group: tpr = .25*.9/.45 = .5, fpr = .25*.1/.55
        assert!((exact.points[1].1 - 0.5).abs() < 1e-12);
        assert!((exact.points[1].0 - 0.025 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn roc_single_class_errors() {
        assert!(matches!(
            roc_curve(&[1.0, 2.0], &[1.0, 1.0]),
            Err(Error::SingleClass { .. })
        ));
        assert!(auc(&[1.0, 2.0], &[-1.0, -1.0]).is_err());
        // exact curve on a single-class model
        let all_neg = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.5],
            etas: vec![0.0, 0.0],
        };
        let s = ScoringFunction::Linear { weights: vec![1.0] };
        assert!(matches!(
            true_roc(&all_neg, &s),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn auc_examples() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let labels = [1.0, -1.0, 1.0, -1.0];
        assert!((auc(&scores, &labels).unwrap() - 0.75).abs() < 1e-15);
        assert!((auc_brute(&scores, &labels).unwrap() - 0.75).abs() < 1e-15);
        let tied = [0.5, 0.5, 0.5];
        let lab = [1.0, -1.0, 1.0];
        assert!((auc(&tied, &lab).unwrap() - 0.5).abs() < 1e-15);
        let perfect = ([3.0, 2.0, 1.0], [1.0, 1.0, -1.0]);
        assert_eq!(auc(&perfect.0, &perfect.1).unwrap(), 1.0);
    }

    #[test]
    fn auc_fast_equals_brute_battery() {
        let mut rng = battery::rng(91);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            // Discretized scores force plenty of ties.
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..7) as f64) / 3.0)
                .collect();
            let mut labels: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            labels[0] = 1.0;
            if n > 1 {
                labels[1] = -1.0;
            }
            let a = auc(&scores, &labels).unwrap();
            let b = auc_brute(&scores, &labels).unwrap();
            assert!((a - b).abs() < 1e-12, "fast {a} vs brute {b}");
        }
    }

    #[test]
    fn risk_auc_identity_examples() {
        let ds = dataset(&[(0.9, 1.0), (0.8, -1.0), (0.7, 1.0), (0.6, -1.0)]);
        let s = ScoringFunction::Linear { weights: vec![1.0] };
        let rep = risk_auc_identity(&ds, &s).unwrap();
        assert!((rep.empirical_risk - 1.0 / 6.0).abs() < 1e-15);
        assert!((rep.auc - 0.75).abs() < 1e-15);
        assert!(rep.residual < 1e-15);
        // All-tied scores, two per class: AUC 1/2 and L_n = 1/3 under the
        // ties-rank-up convention.
        let tied = dataset(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0), (4.0, -1.0)]);
        let flat = ScoringFunction::Table { entries: vec![] };
        let rep2 = risk_auc_identity(&tied, &flat).unwrap();
        assert!((rep2.auc - 0.5).abs() < 1e-15);
        assert!((rep2.empirical_risk - 1.0 / 3.0).abs() < 1e-15);
        assert!(rep2.residual < 1e-15);
        // Perfect scorer.
        let sep = dataset(&[(2.0, 1.0), (1.0, -1.0), (3.0, 1.0)]);
        let rep3 = risk_auc_identity(&sep, &ScoringFunction::Linear { weights: vec![1.0] })
            .unwrap();
        assert_eq!(rep3.empirical_risk, 0.0);
        assert_eq!(rep3.auc, 1.0);
    }

    #[test]
    fn monotone_transform_invariance() {
        let m = m1();
        let ds = m.sample(60, RngSeed(17)).unwrap();
        let base = ScoringFunction::table_from(vec![
            (vec![0.0], 0.2),
            (vec![1.0], 0.5),
            (vec![2.0], 0.9),
        ]);
        // strictly increasing transform of the table scores
        let warped = ScoringFunction::table_from(vec![
            (vec![0.0], (0.2f64).exp()),
            (vec![1.0], (0.5f64).exp()),
            (vec![2.0], (0.9f64).exp()),
        ]);
        let r1 = empirical_risk(&RankingRule::from_scorer(base.clone()), &ds).unwrap();
        let r2 = empirical_risk(&RankingRule::from_scorer(warped.clone()), &ds).unwrap();
        assert_eq!(r1, r2);
        let scores1 = base.scores_on(&ds).unwrap();
        let scores2 = warped.scores_on(&ds).unwrap();
        let labels: Vec<f64> = ds.labels().collect();
        assert!((auc(&scores1, &labels).unwrap() - auc(&scores2, &labels).unwrap()).abs() < 1e-15);
        assert_eq!(
            true_roc(&m, &base).unwrap().points,
            true_roc(&m, &warped).unwrap().points
        );
    }

    #[test]
    fn optimal_roc_dominates_battery() {
        let mut rng = battery::rng(101);
        for _ in 0..10 {
            let m = battery::random_bipartite(&mut rng, 6);
            let etas = match &m {
                SyntheticModel::DiscreteBipartite { etas, .. } => etas.clone(),
                _ => unreachable!(),
            };
            let eta_scorer = ScoringFunction::table_from(
                m.points()
                    .iter()
                    .cloned()
                    .zip(etas.iter().copied())
                    .collect(),
            );
            let optimal = true_roc(&m, &eta_scorer).unwrap();
            for _ in 0..50 {
                let s = ScoringFunction::table_from(battery::random_table_scores(&mut rng, &m));
                let other = true_roc(&m, &s).unwrap();
                assert!(
                    roc_dominates(&optimal, &other, 1e-12),
                    "posterior curve dominated by a table scorer"
                );
            }
        }
    }

    #[test]
    fn rule_serialization_round_trip() {
        let rule = RankingRule::from_scorer(ScoringFunction::Stump {
            dim: 0,
            threshold: 1.5,
            direction: -1,
        });
        let json = serde_json::to_string(&rule).unwrap();
        let back: RankingRule = serde_json::from_str(&json).unwrap();
        assert_eq!(back.evaluate(&[2.0], &[1.0]), rule.evaluate(&[2.0], &[1.0]));
        let pf = RankingRule::pair_function(|_, _| 1.0);
        assert!(serde_json::to_string(&pf).is_err());
        let ens = ScoringFunction::Ensemble {
            members: vec![(0.7, rule)],
        };
        let js = serde_json::to_string(&ens).unwrap();
        let back: ScoringFunction = serde_json::from_str(&js).unwrap();
        assert_eq!(back.pair_score(&[2.0], &[1.0]), ens.pair_score(&[2.0], &[1.0]));
    }
}
