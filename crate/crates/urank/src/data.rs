//! Data model and synthetic generative laws.
//!
//! A [`SyntheticModel`] is a joint law for a feature/label pair with a
//! finite marginal support, which is what makes every population quantity
//! in this crate exactly computable by enumeration. Continuous feature
//! distributions are represented by grids of atoms chosen at construction
//! time; the noisy regression variant keeps a continuous (gaussian) label
//! law on top of the finite feature support.
//!
//! All types here are immutable after construction and safe to share
//! across threads; sampling is a pure function of (model, n, seed).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// One observation: a feature vector and a real label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Ordered i.i.d. training sample with a fixed feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    d: usize,
    samples: Vec<LabeledSample>,
}

impl Dataset {
    /// Build a dataset, validating dimensions and finiteness.
    pub fn new(d: usize, samples: Vec<LabeledSample>) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        for s in &samples {
            if s.x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.x.len(),
                });
            }
            if !s.y.is_finite() || s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset entry".into()));
            }
        }
        Ok(Self { d, samples })
    }

    /// Infer the dimension from the first sample.
    pub fn from_samples(samples: Vec<LabeledSample>) -> Result<Self> {
        let d = samples
            .first()
            .map(|s| s.x.len())
            .ok_or_else(|| Error::Parse("cannot infer dimension of an empty dataset".into()))?;
        Self::new(d, samples)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn labels(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.y)
    }

    /// Guard for pairwise operations.
    pub fn require_pairs(&self) -> Result<()> {
        if self.n() < 2 {
            Err(Error::TooFewSamples(self.n()))
        } else {
            Ok(())
        }
    }
}

/// Half the label difference, `(y - y') / 2`; its sign orders the pair.
#[inline]
pub fn half_label_diff(y: f64, y_prime: f64) -> f64 {
    (y - y_prime) / 2.0
}

/// Conditional label law attached to one support atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionalLaw {
    /// `y = +1` with the given probability, `-1` otherwise.
    SignBernoulli { eta: f64 },
    /// Deterministic label.
    Point { y: f64 },
    /// `y ~ N(mean, sd^2)`.
    Gaussian { mean: f64, sd: f64 },
}

/// One entry of the enumerated feature support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAtom {
    pub x: Vec<f64>,
    pub prob: f64,
    pub law: ConditionalLaw,
}

/// Generative law of one (feature, label) pair.
///
/// Variants share the layout: a list of support points with probabilities,
/// plus the per-point conditional label parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticModel {
    /// Binary ±1 labels with posterior `eta_k` at support point k.
    DiscreteBipartite {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        etas: Vec<f64>,
    },
    /// `y = m(x)` exactly.
    NoiselessRegression {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        means: Vec<f64>,
    },
    /// `y = m(x) + sd(x) * eps` with standard gaussian noise.
    NoisyRegression {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
}

const PROB_SUM_TOL: f64 = 1e-12;

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidModel("empty support".into()));
    }
    let mut sum = 0.0;
    for &p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidModel(format!("probability {p} out of range")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidModel(format!(
            "probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl SyntheticModel {
    /// Check all parameter invariants; every operation calls this first.
    pub fn validate(&self) -> Result<()> {
        let (points, probs) = (self.points(), self.probs());
        validate_probs(probs)?;
        if points.len() != probs.len() {
            return Err(Error::InvalidModel("points/probs length mismatch".into()));
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidModel("zero-dimensional support".into()));
        }
        for x in points {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("support point".into()));
            }
        }
        match self {
            SyntheticModel::DiscreteBipartite { etas, .. } => {
                if etas.len() != probs.len() {
                    return Err(Error::InvalidModel("etas length mismatch".into()));
                }
                for &e in etas {
                    if !(0.0..=1.0).contains(&e) {
                        return Err(Error::InvalidModel(format!("eta {e} outside [0,1]")));
                    }
                }
            }
            SyntheticModel::NoiselessRegression { means, .. } => {
                if means.len() != probs.len() {
                    return Err(Error::InvalidModel("means length mismatch".into()));
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::NonFinite("regression mean".into()));
                }
            }
            SyntheticModel::NoisyRegression { means, sds, .. } => {
                if means.len() != probs.len() || sds.len() != probs.len() {
                    return Err(Error::InvalidModel("means/sds length mismatch".into()));
                }
                if means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::NonFinite("regression mean".into()));
                }
                for &s in sds {
                    if !s.is_finite() || s <= 0.0 {
                        return Err(Error::InvalidModel(format!(
                            "conditional sd {s} must be positive"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        match self {
            SyntheticModel::DiscreteBipartite { points, .. }
            | SyntheticModel::NoiselessRegression { points, .. }
            | SyntheticModel::NoisyRegression { points, .. } => points,
        }
    }

    pub fn probs(&self) -> &[f64] {
        match self {
            SyntheticModel::DiscreteBipartite { probs, .. }
            | SyntheticModel::NoiselessRegression { probs, .. }
            | SyntheticModel::NoisyRegression { probs, .. } => probs,
        }
    }

    pub fn dim(&self) -> usize {
        self.points().first().map_or(0, Vec::len)
    }

    pub fn support_size(&self) -> usize {
        self.points().len()
    }

    /// Index of a support point equal to `x` (exact float match).
    pub fn atom_index(&self, x: &[f64]) -> Option<usize> {
        self.points().iter().position(|p| p.as_slice() == x)
    }

    /// Posterior `P(Y = 1 | X = x)` for bipartite models.
    pub fn eta_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            SyntheticModel::DiscreteBipartite { etas, .. } => {
                self.atom_index(x).map(|k| etas[k])
            }
            _ => None,
        }
    }

    /// Regression mean `m(x)` for the regression variants.
    pub fn mean_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            SyntheticModel::NoiselessRegression { means, .. }
            | SyntheticModel::NoisyRegression { means, .. } => {
                self.atom_index(x).map(|k| means[k])
            }
            _ => None,
        }
    }

    /// Conditional sd `sd(x)` for the noisy regression variant.
    pub fn sd_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            SyntheticModel::NoisyRegression { sds, .. } => self.atom_index(x).map(|k| sds[k]),
            _ => None,
        }
    }

    /// `P(Y = 1)` for bipartite models.
    pub fn positive_rate(&self) -> Result<f64> {
        match self {
            SyntheticModel::DiscreteBipartite { probs, etas, .. } => {
                Ok(crate::numeric::csum(
                    probs.iter().zip(etas).map(|(p, e)| p * e),
                ))
            }
            _ => Err(Error::InvalidModel(
                "positive rate is defined for bipartite models only".into(),
            )),
        }
    }

    /// Exhaustive feature support with conditional-law descriptors.
    pub fn enumerate_support(&self) -> Result<Vec<SupportAtom>> {
        self.validate()?;
        let out = self
            .points()
            .iter()
            .zip(self.probs())
            .enumerate()
            .map(|(k, (x, &prob))| SupportAtom {
                x: x.clone(),
                prob,
                law: match self {
                    SyntheticModel::DiscreteBipartite { etas, .. } => {
                        ConditionalLaw::SignBernoulli { eta: etas[k] }
                    }
                    SyntheticModel::NoiselessRegression { means, .. } => {
                        ConditionalLaw::Point { y: means[k] }
                    }
                    SyntheticModel::NoisyRegression { means, sds, .. } => {
                        ConditionalLaw::Gaussian {
                            mean: means[k],
                            sd: sds[k],
                        }
                    }
                },
            })
            .collect();
        Ok(out)
    }

    /// Finite joint (feature, label) support, for exact expectations of
    /// arbitrary pair kernels. Zero-probability atoms are dropped. The
    /// noisy regression variant has a continuous label law and errors.
    pub fn joint_atoms(&self) -> Result<Vec<(LabeledSample, f64)>> {
        self.validate()?;
        let mut atoms = Vec::new();
        match self {
            SyntheticModel::DiscreteBipartite {
                points,
                probs,
                etas,
            } => {
                for ((x, &p), &eta) in points.iter().zip(probs).zip(etas) {
                    if p * eta > 0.0 {
                        atoms.push((LabeledSample::new(x.clone(), 1.0), p * eta));
                    }
                    if p * (1.0 - eta) > 0.0 {
                        atoms.push((LabeledSample::new(x.clone(), -1.0), p * (1.0 - eta)));
                    }
                }
            }
            SyntheticModel::NoiselessRegression {
                points,
                probs,
                means,
            } => {
                for ((x, &p), &m) in points.iter().zip(probs).zip(means) {
                    if p > 0.0 {
                        atoms.push((LabeledSample::new(x.clone(), m), p));
                    }
                }
            }
            SyntheticModel::NoisyRegression { .. } => {
                return Err(Error::NotFiniteSupport(
                    "noisy regression labels are gaussian".into(),
                ));
            }
        }
        Ok(atoms)
    }

    /// Draw `n` i.i.d. samples; deterministic given the seed.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Result<Dataset> {
        self.validate()?;
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        let mut rng = seed.rng();
        let points = self.points();
        let probs = self.probs();
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let k = draw_index(&mut rng, probs);
            let x = points[k].clone();
            let y = match self {
                SyntheticModel::DiscreteBipartite { etas, .. } => {
                    if rng.random::<f64>() < etas[k] {
                        1.0
                    } else {
                        -1.0
                    }
                }
                SyntheticModel::NoiselessRegression { means, .. } => means[k],
                SyntheticModel::NoisyRegression { means, sds, .. } => {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    means[k] + sds[k] * eps
                }
            };
            samples.push(LabeledSample::new(x, y));
        }
        Dataset::new(self.dim(), samples)
    }
}

/// CDF inversion over a normalized probability vector.
fn draw_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery;

    #[test]
    fn half_label_diff_basic() {
        assert_eq!(half_label_diff(1.0, -1.0), 1.0);
        assert_eq!(half_label_diff(2.5, 2.5), 0.0);
        assert_eq!(half_label_diff(3.0, 0.5), 1.25);
    }

    proptest::proptest! {
        #[test]
        fn half_label_diff_antisymmetric(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            proptest::prop_assert_eq!(half_label_diff(a, b), -half_label_diff(b, a));
        }
    }

    #[test]
    fn degenerate_support_all_positive() {
        let m = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0]],
            probs: vec![1.0],
            etas: vec![1.0],
        };
        let ds = m.sample(5, RngSeed(3)).unwrap();
        assert!(ds.labels().all(|y| y == 1.0));
    }

    #[test]
    fn noiseless_labels_equal_means() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![1.0], vec![2.0], vec![3.0]],
            probs: vec![1.0 / 3.0; 3],
            means: vec![1.0, 2.0, 3.0],
        };
        let ds = m.sample(3, RngSeed(11)).unwrap();
        for s in ds.samples() {
            assert_eq!(s.y, s.x[0]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = battery::three_atom_bipartite();
        let a = m.sample(200, RngSeed(42)).unwrap();
        let b = m.sample(200, RngSeed(42)).unwrap();
        assert_eq!(a, b);
        let c = m.sample(200, RngSeed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn positive_fraction_matches_enumeration() {
        // Empirical frequency of y=+1 within the 3-sigma binomial band
        // around p = sum p_k eta_k.
        let m = battery::three_atom_bipartite();
        let p = m.positive_rate().unwrap();
        assert!((p - 0.45).abs() < 1e-15);
        let n = 100_000;
        let ds = m.sample(n, RngSeed(7)).unwrap();
        let frac = ds.labels().filter(|&y| y > 0.0).count() as f64 / n as f64;
        let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (frac - p).abs() < band,
            "frac {frac} outside band {band} around {p}"
        );
    }

    #[test]
    fn per_point_label_frequencies_converge() {
        let m = battery::three_atom_bipartite();
        let n = 100_000;
        let ds = m.sample(n, RngSeed(19)).unwrap();
        for (k, (x, &eta)) in m
            .points()
            .iter()
            .zip(match &m {
                SyntheticModel::DiscreteBipartite { etas, .. } => etas,
                _ => unreachable!(),
            })
            .enumerate()
        {
            let at_point: Vec<&LabeledSample> = ds
                .samples()
                .iter()
                .filter(|s| s.x.as_slice() == x.as_slice())
                .collect();
            let m_k = at_point.len() as f64;
            let frac = at_point.iter().filter(|s| s.y > 0.0).count() as f64 / m_k;
            let band = 3.0 * (eta * (1.0 - eta) / m_k).sqrt().max(1e-9);
            assert!(
                (frac - eta).abs() <= band,
                "atom {k}: frac {frac} vs eta {eta} (band {band})"
            );
        }
    }

    #[test]
    fn enumerate_support_probs_sum_to_one() {
        let m = battery::three_atom_bipartite();
        let atoms = m.enumerate_support().unwrap();
        assert_eq!(atoms.len(), 3);
        let sum: f64 = atoms.iter().map(|a| a.prob).sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert_eq!(atoms[0].prob, 0.5);
        assert_eq!(atoms[1].prob, 0.25);
        assert_eq!(atoms[2].prob, 0.25);
    }

    #[test]
    fn single_point_support() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![4.0]],
            probs: vec![1.0],
            means: vec![2.0],
        };
        let atoms = m.enumerate_support().unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].prob, 1.0);
    }

    #[test]
    fn grid_regression_uniform_probs() {
        let m = SyntheticModel::NoiselessRegression {
            points: vec![vec![1.0], vec![2.0], vec![3.0]],
            probs: vec![1.0 / 3.0; 3],
            means: vec![1.0, 2.0, 3.0],
        };
        let atoms = m.enumerate_support().unwrap();
        assert_eq!(atoms.len(), 3);
        for a in &atoms {
            assert!((a.prob - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let bad_probs = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.6],
            etas: vec![0.5, 0.5],
        };
        assert!(matches!(bad_probs.validate(), Err(Error::InvalidModel(_))));
        let bad_eta = SyntheticModel::DiscreteBipartite {
            points: vec![vec![0.0]],
            probs: vec![1.0],
            etas: vec![1.5],
        };
        assert!(bad_eta.validate().is_err());
        let bad_sd = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0]],
            probs: vec![1.0],
            means: vec![0.0],
            sds: vec![0.0],
        };
        assert!(bad_sd.validate().is_err());
        assert!(bad_sd.sample(5, RngSeed(0)).is_err());
    }

    #[test]
    fn joint_atoms_bipartite() {
        let m = battery::three_atom_bipartite();
        let atoms = m.joint_atoms().unwrap();
        assert_eq!(atoms.len(), 6);
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let noisy = SyntheticModel::NoisyRegression {
            points: vec![vec![0.0]],
            probs: vec![1.0],
            means: vec![0.0],
            sds: vec![1.0],
        };
        assert!(matches!(
            noisy.joint_atoms(),
            Err(Error::NotFiniteSupport(_))
        ));
    }
}
