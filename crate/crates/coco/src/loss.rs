//! Supervision objectives over predicted logits: weighted binary
//! cross-entropy, the multi-sample contrastive loss, the pairwise margin
//! ranking loss, and their weighted combination. Every function returns the
//! loss together with its exact gradient with respect to the logits.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Prediction;
use crate::rng::{derive_subseed, SplitMix64};

/// Hyperparameters of the contrastive objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Softmax temperature of the multi-sample contrastive loss.
    pub tau: f64,
    /// Margin of the pairwise ranking loss.
    pub gamma: f64,
    /// Weight of the ranking term in the combined loss.
    pub lambda_rank: f64,
    /// Maximum number of (positive, negative) pairs evaluated per solution;
    /// beyond it pairs are sampled uniformly with the seeded generator.
    pub pair_cap: usize,
    pub seed: u64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            gamma: 0.9,
            lambda_rank: 0.01,
            pair_cap: 50_000,
            seed: 0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 || self.gamma <= 0.0 || self.lambda_rank < 0.0 || self.pair_cap == 0 {
            return Err(Error::Config(
                "LossConfig: tau > 0, gamma > 0, lambda_rank >= 0, pair_cap >= 1 required".into(),
            ));
        }
        Ok(())
    }
}

/// Feasible solutions restricted to the binary prefix, with normalized
/// weights and original objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSolutionSet {
    pub solutions: Vec<Vec<u8>>,
    pub weights: Vec<f64>,
    pub objectives: Vec<f64>,
}

impl LabeledSolutionSet {
    pub fn new(solutions: Vec<Vec<u8>>, weights: Vec<f64>, objectives: Vec<f64>) -> Result<Self> {
        if solutions.is_empty() {
            return Err(Error::Data("labeled solution set is empty".into()));
        }
        if solutions.len() != weights.len() || solutions.len() != objectives.len() {
            return Err(Error::Dimension(format!(
                "{} solutions, {} weights, {} objectives",
                solutions.len(),
                weights.len(),
                objectives.len()
            )));
        }
        let p = solutions[0].len();
        if solutions.iter().any(|s| s.len() != p) {
            return Err(Error::Dimension("solutions have ragged lengths".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Data("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            solutions,
            weights,
            objectives,
        })
    }

    pub fn num_binary(&self) -> usize {
        self.solutions[0].len()
    }
}

/// Solution-weighted binary cross-entropy on the predicted marginals, with
/// the analytic sigmoid gradient on the logits. Logs are clamped at 1e-12.
pub fn bce_weighted(pred: &Prediction, labels: &LabeledSolutionSet) -> Result<(f64, Vec<f64>)> {
    let p = pred.marginals.len();
    if labels.num_binary() != p {
        return Err(Error::Dimension(format!(
            "labels cover {} binaries, prediction has {p}",
            labels.num_binary()
        )));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; p];
    for (sol, &w) in labels.solutions.iter().zip(labels.weights.iter()) {
        for j in 0..p {
            let x = f64::from(sol[j]);
            let xhat = pred.marginals[j];
            loss -= w * (x * xhat.max(1e-12).ln() + (1.0 - x) * (1.0 - xhat).max(1e-12).ln());
            grad[j] += w * (sigmoid(pred.logits[j]) - x);
        }
    }
    Ok((loss, grad))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log-sum-exp of `z[i] / tau` over `indices`, max-shifted for stability.
fn log_sum_exp(z: &[f64], tau: f64, indices: &[usize]) -> f64 {
    let m = indices
        .iter()
        .map(|&i| z[i] / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = indices.iter().map(|&i| ((z[i] / tau) - m).exp()).sum();
    m + s.ln()
}

/// Multi-sample contrastive loss: negative log of the softmax mass the
/// positives hold within all binaries. An empty positive set contributes
/// zero (logged once as a warning).
pub fn mscl(z: &[f64], positives: &[usize], tau: f64) -> (f64, Vec<f64>) {
    let p = z.len();
    if positives.is_empty() {
        warn!("mscl: empty positive set, contributing zero loss");
        return (0.0, vec![0.0; p]);
    }
    let all: Vec<usize> = (0..p).collect();
    let lse_all = log_sum_exp(z, tau, &all);
    let lse_pos = log_sum_exp(z, tau, positives);
    let loss = lse_all - lse_pos;

    let mut grad = vec![0.0; p];
    for j in 0..p {
        grad[j] = ((z[j] / tau) - lse_all).exp() / tau;
    }
    for &j in positives {
        grad[j] -= ((z[j] / tau) - lse_pos).exp() / tau;
    }
    (loss, grad)
}

/// Mean hinge loss over (positive, negative) logit pairs with margin
/// `gamma`. All pairs are used when their count is at most `pair_cap`;
/// otherwise `pair_cap` pairs are sampled uniformly (with replacement) by
/// the seeded generator, independent of the logit values so finite
/// differences stay consistent.
pub fn rank_loss(
    z: &[f64],
    positives: &[usize],
    negatives: &[usize],
    gamma: f64,
    pair_cap: usize,
    seed: u64,
) -> (f64, Vec<f64>) {
    let p = z.len();
    let mut grad = vec![0.0; p];
    if positives.is_empty() || negatives.is_empty() {
        return (0.0, grad);
    }
    let total_pairs = positives.len() * negatives.len();
    let mut loss = 0.0;
    if total_pairs <= pair_cap {
        let inv = 1.0 / total_pairs as f64;
        for &i in positives {
            for &j in negatives {
                let margin = gamma - (z[i] - z[j]);
                if margin > 0.0 {
                    loss += margin * inv;
                    grad[i] -= inv;
                    grad[j] += inv;
                }
            }
        }
    } else {
        let mut rng = SplitMix64::new(seed);
        let inv = 1.0 / pair_cap as f64;
        for _ in 0..pair_cap {
            let i = positives[rng.gen_index(positives.len())];
            let j = negatives[rng.gen_index(negatives.len())];
            let margin = gamma - (z[i] - z[j]);
            if margin > 0.0 {
                loss += margin * inv;
                grad[i] -= inv;
                grad[j] += inv;
            }
        }
    }
    (loss, grad)
}

/// Solution-weighted combination of MSCL and the ranking loss over each
/// solution's positive/negative partition of the binaries.
pub fn vcl(
    pred: &Prediction,
    labels: &LabeledSolutionSet,
    cfg: &LossConfig,
) -> Result<(f64, Vec<f64>)> {
    vcl_with(pred, labels, cfg, true, true)
}

/// [`vcl`] with either component switched off (the ablation variants).
pub fn vcl_with(
    pred: &Prediction,
    labels: &LabeledSolutionSet,
    cfg: &LossConfig,
    with_mscl: bool,
    with_rank: bool,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    let z = &pred.logits;
    let p = z.len();
    if labels.num_binary() != p {
        return Err(Error::Dimension(format!(
            "labels cover {} binaries, prediction has {p}",
            labels.num_binary()
        )));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; p];
    for (i, (sol, &w)) in labels
        .solutions
        .iter()
        .zip(labels.weights.iter())
        .enumerate()
    {
        let positives: Vec<usize> = (0..p).filter(|&j| sol[j] == 1).collect();
        let negatives: Vec<usize> = (0..p).filter(|&j| sol[j] == 0).collect();
        if with_mscl {
            let (l, g) = mscl(z, &positives, cfg.tau);
            loss += w * l;
            for (gj, &gv) in grad.iter_mut().zip(g.iter()) {
                *gj += w * gv;
            }
        }
        if with_rank && cfg.lambda_rank != 0.0 {
            let pair_seed = derive_subseed(cfg.seed, &format!("rank-pairs-{i}"));
            let (l, g) = rank_loss(z, &positives, &negatives, cfg.gamma, cfg.pair_cap, pair_seed);
            loss += w * cfg.lambda_rank * l;
            for (gj, &gv) in grad.iter_mut().zip(g.iter()) {
                *gj += w * cfg.lambda_rank * gv;
            }
        }
    }
    Ok((loss, grad))
}
