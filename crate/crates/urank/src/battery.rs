//! Reusable model and scorer generators for experiments and test batteries.

use rand::Rng;

use crate::data::SyntheticModel;
use crate::rng::RngSeed;

/// Three-atom bipartite fixture: support {0,1,2} with probabilities
/// (0.5, 0.25, 0.25) and posteriors (0.2, 0.5, 0.9). Its optimal ranking
/// risk is 0.0975, handy as an exactly known reference.
pub fn three_atom_bipartite() -> SyntheticModel {
    SyntheticModel::DiscreteBipartite {
        points: vec![vec![0.0], vec![1.0], vec![2.0]],
        probs: vec![0.5, 0.25, 0.25],
        etas: vec![0.2, 0.5, 0.9],
    }
}

/// Bipartite model whose posterior values form a uniform grid over
/// [lo, hi] with equal atom probabilities.
pub fn uniform_eta_bipartite(atoms: usize, lo: f64, hi: f64) -> SyntheticModel {
    assert!(atoms >= 2);
    let step = (hi - lo) / (atoms - 1) as f64;
    SyntheticModel::DiscreteBipartite {
        points: (0..atoms).map(|k| vec![k as f64]).collect(),
        probs: vec![1.0 / atoms as f64; atoms],
        etas: (0..atoms).map(|k| lo + step * k as f64).collect(),
    }
}

/// Random finite-support bipartite model with 2..=max_atoms atoms on a
/// 1-D integer grid. Probabilities are normalized positive draws; etas
/// are drawn in (0.02, 0.98) to keep both classes present.
pub fn random_bipartite<R: Rng>(rng: &mut R, max_atoms: usize) -> SyntheticModel {
    let k = rng.random_range(2..=max_atoms.max(2));
    let mut probs: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    // Renormalize the last entry so the sum is exactly 1 up to one rounding.
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = 1.0 - head;
    SyntheticModel::DiscreteBipartite {
        points: (0..k).map(|j| vec![j as f64]).collect(),
        probs,
        etas: (0..k).map(|_| rng.random_range(0.02..0.98)).collect(),
    }
}

/// Random noiseless regression model on a 1-D integer grid.
pub fn random_noiseless<R: Rng>(rng: &mut R, max_atoms: usize) -> SyntheticModel {
    let k = rng.random_range(2..=max_atoms.max(2));
    let mut probs: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    let head: f64 = probs[..k - 1].iter().sum();
    probs[k - 1] = 1.0 - head;
    SyntheticModel::NoiselessRegression {
        points: (0..k).map(|j| vec![j as f64]).collect(),
        probs,
        means: (0..k).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

/// Random score table over the model's support points.
pub fn random_table_scores<R: Rng>(rng: &mut R, model: &SyntheticModel) -> Vec<(Vec<f64>, f64)> {
    model
        .points()
        .iter()
        .map(|x| (x.clone(), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Convenience: seeded rng for battery loops.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    RngSeed(seed).rng()
}
