//! Experiment configuration: a single JSON document per run.
//!
//! The document carries the subcommand id and a `params` object whose
//! schema depends on the subcommand. Unknown keys anywhere in the document
//! are rejected before any work starts. CLI flags (`--seed`, `--out`)
//! override the corresponding fields; the effective configuration (after
//! overrides, with defaults filled in) is what gets hashed into the output
//! directory name, excluding the fields that cannot affect result bytes
//! (output directory, worker count).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use urank::io::Format;
use urank::learners::CostFunction;
use urank::risk::{RankingRule, ScoringFunction};
use urank::{Dataset, Error, Result, RngSeed, SyntheticModel};

/// Top-level shape of the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub subcommand: String,
    pub params: Value,
}

/// Where a run gets its dataset: a file, or a model to sample from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub model: Option<SyntheticModel>,
    #[serde(default)]
    pub n: Option<usize>,
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        match (&self.path, &self.model) {
            (Some(_), Some(_)) | (None, None) => Err(Error::Parse(
                "data spec needs exactly one of `path` or `model`".into(),
            )),
            (None, Some(m)) => {
                m.validate()?;
                if self.n.is_none() {
                    return Err(Error::Parse("sampled data spec needs `n`".into()));
                }
                Ok(())
            }
            (Some(_), None) => Ok(()),
        }
    }

    pub fn realize(&self, seed: RngSeed) -> Result<Dataset> {
        self.validate()?;
        if let Some(path) = &self.path {
            let format = self.format.unwrap_or(Format::Csv);
            urank::io::load_dataset(path, format)
        } else {
            let model = self.model.as_ref().unwrap();
            model.sample(self.n.unwrap(), seed)
        }
    }
}

/// Finite rule class for the rate experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSpec {
    /// Stumps over a per-dimension threshold grid (both directions).
    StumpGrid { thresholds: Vec<Vec<f64>> },
    /// Score tables over the model's support points, one score vector per
    /// class member (aligned with the model's point order).
    Tables { score_sets: Vec<Vec<f64>> },
}

impl ClassSpec {
    pub fn build_scorers(&self, model: &SyntheticModel) -> Result<Vec<ScoringFunction>> {
        let out = match self {
            ClassSpec::StumpGrid { thresholds } => urank::learners::stump_grid(thresholds),
            ClassSpec::Tables { score_sets } => score_sets
                .iter()
                .map(|scores| {
                    if scores.len() != model.support_size() {
                        return Err(Error::DimensionMismatch {
                            expected: model.support_size(),
                            got: scores.len(),
                        });
                    }
                    Ok(ScoringFunction::table_from(
                        model
                            .points()
                            .iter()
                            .cloned()
                            .zip(scores.iter().copied())
                            .collect(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if out.is_empty() {
            return Err(Error::EmptyClass("empty rule class spec".into()));
        }
        Ok(out)
    }
}

/// Pair kernel built from a rule and the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// Misranking indicator of the rule (symmetrized).
    Mistake { rule: RankingRule },
    /// Misranking indicator minus the optimal rule's (symmetrized).
    Excess { rule: RankingRule },
    /// Degenerate remainder of the rule's misranking kernel under the
    /// model (both projections removed).
    ProjectedMistake { rule: RankingRule },
    /// `y * y'`, a simple non-indicator kernel.
    LabelProduct,
}

impl KernelSpec {
    pub fn build(&self, model: &SyntheticModel) -> Result<urank::ustat::PairKernel> {
        Ok(match self {
            KernelSpec::Mistake { rule } => urank::risk::mistake_kernel(rule.clone()),
            KernelSpec::Excess { rule } => urank::risk::excess_kernel(rule.clone(), model)?,
            KernelSpec::ProjectedMistake { rule } => {
                let base = urank::risk::mistake_kernel(rule.clone());
                urank::ustat::projected_kernel(&base, model)?
            }
            KernelSpec::LabelProduct => {
                urank::ustat::PairKernel::symmetrized(|a, b| a.y * b.y)
            }
        })
    }
}

fn default_dpg_c() -> f64 {
    1.0
}
fn default_moment_c() -> f64 {
    30.0
}

/// User-settable constants of the tail bounds (the suite asserts bound
/// shapes at these constants, never particular constant values).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConstants {
    #[serde(default = "default_dpg_c")]
    pub dpg_c: f64,
    #[serde(default = "default_moment_c")]
    pub moment_c: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            dpg_c: default_dpg_c(),
            moment_c: default_moment_c(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailExperiment {
    /// Deviation of the kernel's U-statistic from its exact mean.
    UstatTail,
    /// Degenerate chaos supremum against the moment-bound shape.
    Moment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainSpec {
    Boost {
        rounds: usize,
        thresholds: Vec<Vec<f64>>,
        #[serde(default)]
        budget: Option<f64>,
        cost: CostFunction,
    },
    Kernel {
        #[serde(default)]
        budget: Option<f64>,
        steps: usize,
        gamma0: f64,
        /// Full kernel spec; takes precedence over `bandwidth`.
        #[serde(default)]
        kernel: Option<urank::risk::RankKernel>,
        #[serde(default)]
        bandwidth: Option<f64>,
        cost: CostFunction,
    },
}

/// Trained scorer source for evaluation: inline or from a train run's
/// result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSource {
    #[serde(default)]
    pub scorer: Option<ScoringFunction>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl ScorerSource {
    pub fn validate(&self) -> Result<()> {
        match (&self.scorer, &self.file) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::Parse(
                "scorer source needs exactly one of `scorer` or `file`".into(),
            )),
        }
    }

    pub fn load(&self) -> Result<ScoringFunction> {
        self.validate()?;
        if let Some(s) = &self.scorer {
            return Ok(s.clone());
        }
        let text = std::fs::read_to_string(self.file.as_ref().unwrap())?;
        let value: Value = serde_json::from_str(&text)?;
        // accept either a bare scorer or a train result with a `scorer` key
        let scorer_value = value.get("scorer").cloned().unwrap_or(value);
        Ok(serde_json::from_value(scorer_value)?)
    }
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateCfg {
    pub model: SyntheticModel,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesCfg {
    pub model: SyntheticModel,
    pub class: ClassSpec,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    /// Reject classes whose best rule does not attain the model's optimal
    /// risk (the zero-approximation-error regime the fast-rate experiment
    /// assumes).
    #[serde(default)]
    pub require_optimal_in_class: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceCfg {
    pub model: SyntheticModel,
    pub rule: RankingRule,
    pub n: usize,
    pub replicates: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeCfg {
    pub model: SyntheticModel,
    pub kernel: KernelSpec,
    pub n: usize,
    /// Inner Monte Carlo sample size for models without finite joint
    /// support (the result is flagged approximate).
    #[serde(default)]
    pub mc_inner: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsCfg {
    pub model: SyntheticModel,
    pub kernel: KernelSpec,
    pub n: usize,
    pub replicates: usize,
    pub experiment: TailExperiment,
    #[serde(default)]
    pub constants: BoundConstants,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocCfg {
    pub data: DataSpec,
    pub scorer: ScoringFunction,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCfg {
    pub data: DataSpec,
    pub algorithm: TrainSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalCfg {
    pub data: DataSpec,
    pub scorer: ScorerSource,
    #[serde(default)]
    pub cost: Option<CostFunction>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Fully parsed per-subcommand configuration.
#[derive(Debug, Clone)]
pub enum ParsedConfig {
    Generate(GenerateCfg),
    Rates(RatesCfg),
    Variance(VarianceCfg),
    Decompose(DecomposeCfg),
    Bounds(BoundsCfg),
    Roc(RocCfg),
    Train(TrainCfg),
    Eval(EvalCfg),
}

impl ParsedConfig {
    pub fn subcommand(&self) -> &'static str {
        match self {
            ParsedConfig::Generate(_) => "generate",
            ParsedConfig::Rates(_) => "rates",
            ParsedConfig::Variance(_) => "variance",
            ParsedConfig::Decompose(_) => "decompose",
            ParsedConfig::Bounds(_) => "bounds",
            ParsedConfig::Roc(_) => "roc",
            ParsedConfig::Train(_) => "train",
            ParsedConfig::Eval(_) => "eval",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ParsedConfig::Generate(c) => c.seed,
            ParsedConfig::Rates(c) => c.seed,
            ParsedConfig::Variance(c) => c.seed,
            ParsedConfig::Decompose(c) => c.seed,
            ParsedConfig::Bounds(c) => c.seed,
            ParsedConfig::Roc(c) => c.seed,
            ParsedConfig::Train(c) => c.seed,
            ParsedConfig::Eval(c) => c.seed,
        }
    }

    /// Effective params object (defaults filled in), used for hashing and
    /// the metadata echo.
    pub fn effective_params(&self) -> Result<Value> {
        Ok(match self {
            ParsedConfig::Generate(c) => serde_json::to_value(c)?,
            ParsedConfig::Rates(c) => serde_json::to_value(c)?,
            ParsedConfig::Variance(c) => serde_json::to_value(c)?,
            ParsedConfig::Decompose(c) => serde_json::to_value(c)?,
            ParsedConfig::Bounds(c) => serde_json::to_value(c)?,
            ParsedConfig::Roc(c) => serde_json::to_value(c)?,
            ParsedConfig::Train(c) => serde_json::to_value(c)?,
            ParsedConfig::Eval(c) => serde_json::to_value(c)?,
        })
    }

    /// Semantic validation beyond the schema, run before any filesystem
    /// work.
    pub fn validate(&self) -> Result<()> {
        match self {
            ParsedConfig::Generate(c) => {
                c.model.validate()?;
                if c.n < 2 {
                    return Err(Error::TooFewSamples(c.n));
                }
            }
            ParsedConfig::Rates(c) => {
                c.model.validate()?;
                if c.sample_sizes.is_empty() {
                    return Err(Error::Parse("sample_sizes must be non-empty".into()));
                }
                if c.sample_sizes.iter().any(|&n| n < 2) {
                    return Err(Error::TooFewSamples(0));
                }
                if c.replicates == 0 {
                    return Err(Error::ParamRange("replicates must be >= 1".into()));
                }
                let scorers = c.class.build_scorers(&c.model)?;
                if c.require_optimal_in_class {
                    let l_star = urank::risk::bayes_risk(&c.model)?;
                    let best = scorers
                        .iter()
                        .map(|s| {
                            urank::risk::true_risk(
                                &RankingRule::from_scorer(s.clone()),
                                &c.model,
                            )
                        })
                        .collect::<Result<Vec<f64>>>()?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    if best > l_star + 1e-12 {
                        return Err(Error::ParamRange(format!(
                            "class does not contain an optimal rule: best exact risk {best} vs optimum {l_star}"
                        )));
                    }
                }
            }
            ParsedConfig::Variance(c) => {
                c.model.validate()?;
                if c.n < 2 {
                    return Err(Error::TooFewSamples(c.n));
                }
                if c.replicates < 100 {
                    return Err(Error::ParamRange(
                        "variance comparison needs at least 100 replicates".into(),
                    ));
                }
            }
            ParsedConfig::Decompose(c) => {
                c.model.validate()?;
                if c.n < 2 {
                    return Err(Error::TooFewSamples(c.n));
                }
            }
            ParsedConfig::Bounds(c) => {
                c.model.validate()?;
                if c.n < 2 {
                    return Err(Error::TooFewSamples(c.n));
                }
                if let Some(grid) = &c.t_grid {
                    if grid.iter().any(|&t| t <= 0.0) {
                        return Err(Error::ParamRange("t grid must be positive".into()));
                    }
                }
            }
            ParsedConfig::Roc(c) => c.data.validate()?,
            ParsedConfig::Train(c) => {
                c.data.validate()?;
                match &c.algorithm {
                    TrainSpec::Boost { rounds, thresholds, budget, .. } => {
                        if *rounds == 0 {
                            return Err(Error::ParamRange("rounds must be >= 1".into()));
                        }
                        if thresholds.iter().all(|t| t.is_empty()) {
                            return Err(Error::EmptyClass("empty stump grid".into()));
                        }
                        if let Some(b) = budget {
                            if b.is_nan() || *b <= 0.0 {
                                return Err(Error::ParamRange("budget must be positive".into()));
                            }
                        }
                    }
                    TrainSpec::Kernel { steps, gamma0, budget, kernel, .. } => {
                        if *steps == 0 {
                            return Err(Error::ParamRange("steps must be >= 1".into()));
                        }
                        if gamma0.is_nan() || *gamma0 <= 0.0 {
                            return Err(Error::ParamRange("gamma0 must be positive".into()));
                        }
                        if let Some(b) = budget {
                            if b.is_nan() || *b <= 0.0 {
                                return Err(Error::ParamRange("budget must be positive".into()));
                            }
                        }
                        if let Some(k) = kernel {
                            k.validate()?;
                        }
                    }
                }
            }
            ParsedConfig::Eval(c) => {
                c.data.validate()?;
                c.scorer.validate()?;
            }
        }
        Ok(())
    }
}

/// Parse the config document text.
pub fn parse_doc(text: &str) -> Result<ConfigDoc> {
    Ok(serde_json::from_str(text)?)
}

/// Build the typed config for a subcommand, applying the `--seed` override
/// and rejecting unknown keys anywhere in `params`.
pub fn build(doc: &ConfigDoc, subcommand: &str, seed_override: Option<u64>) -> Result<ParsedConfig> {
    if doc.subcommand != subcommand {
        return Err(Error::Parse(format!(
            "config is for subcommand `{}`, invoked as `{subcommand}`",
            doc.subcommand
        )));
    }
    let mut params = doc.params.clone();
    if let Some(seed) = seed_override {
        params
            .as_object_mut()
            .ok_or_else(|| Error::Parse("params must be an object".into()))?
            .insert("seed".into(), Value::from(seed));
    }
    let parsed = match subcommand {
        "generate" => ParsedConfig::Generate(serde_json::from_value(params.clone())?),
        "rates" => ParsedConfig::Rates(serde_json::from_value(params.clone())?),
        "variance" => ParsedConfig::Variance(serde_json::from_value(params.clone())?),
        "decompose" => ParsedConfig::Decompose(serde_json::from_value(params.clone())?),
        "bounds" => ParsedConfig::Bounds(serde_json::from_value(params.clone())?),
        "roc" => ParsedConfig::Roc(serde_json::from_value(params.clone())?),
        "train" => ParsedConfig::Train(serde_json::from_value(params.clone())?),
        "eval" => ParsedConfig::Eval(serde_json::from_value(params.clone())?),
        other => return Err(Error::Parse(format!("unknown subcommand `{other}`"))),
    };
    // Typed deserialization tolerates unknown keys in some nested enum
    // positions; enforce rejection by checking the input keys against the
    // canonical re-serialization.
    check_unknown_keys(&params, &parsed.effective_params()?, "params")?;
    parsed.validate()?;
    Ok(parsed)
}

fn check_unknown_keys(input: &Value, canonical: &Value, path: &str) -> Result<()> {
    match (input, canonical) {
        (Value::Object(im), Value::Object(cm)) => {
            for (k, v) in im {
                match cm.get(k) {
                    None => {
                        return Err(Error::Parse(format!("unknown key `{path}.{k}`")));
                    }
                    Some(cv) => check_unknown_keys(v, cv, &format!("{path}.{k}"))?,
                }
            }
            Ok(())
        }
        (Value::Array(ia), Value::Array(ca)) if ia.len() == ca.len() => {
            for (i, (v, cv)) in ia.iter().zip(ca).enumerate() {
                check_unknown_keys(v, cv, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Hash of the effective run identity: subcommand + effective params.
pub fn config_hash(subcommand: &str, effective_params: &Value) -> String {
    let canonical = serde_json::json!({
        "subcommand": subcommand,
        "params": effective_params,
    });
    let mut hasher = Sha256::new();
    hasher.update(canonical.to_string().as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
