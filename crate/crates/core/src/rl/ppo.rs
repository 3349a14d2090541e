use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{standardize, RolloutBuffer};
use super::dist::{gaussian_log_prob, squashed_entropy};
use crate::error::TrainError;
use crate::nn::{AdamConfig, ForwardCache, PolicyParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_range: f64,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to zero over the training budget.
    #[serde(default)]
    pub anneal_lr: bool,
    /// Treat the episode time limit as truncation and bootstrap from the
    /// value of the last state. When false a timeout is terminal.
    #[serde(default)]
    pub bootstrap_timeouts: bool,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub minibatches: usize,
    pub epochs: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub normalize_observations: bool,
    pub normalize_rewards: bool,
    /// Clip bound for normalized observations and rewards.
    pub norm_clip: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_range: 0.2,
            learning_rate: 2.5e-4,
            anneal_lr: false,
            bootstrap_timeouts: false,
            ent_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            minibatches: 4,
            epochs: 4,
            horizon: 128,
            gamma: 0.99,
            lambda: 0.9,
            normalize_observations: true,
            normalize_rewards: true,
            norm_clip: 10.0,
            normalize_advantages: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.horizon == 0 || self.minibatches == 0 || self.minibatches > self.horizon {
            return Err("ppo: horizon and minibatches must satisfy 0 < minibatches <= horizon".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err("ppo: gamma and lambda must lie in [0, 1]".into());
        }
        for (v, n) in [
            (self.clip_range, "clip_range"),
            (self.learning_rate, "learning_rate"),
            (self.ent_coef, "ent_coef"),
            (self.vf_coef, "vf_coef"),
            (self.max_grad_norm, "max_grad_norm"),
            (self.norm_clip, "norm_clip"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("ppo.{n} must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Loss terms and gradient of one minibatch.
pub struct MinibatchGrad<T> {
    pub grads: Vec<T>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clipped: usize,
}

/// Clipped-surrogate loss and its exact gradient on the samples `idx`.
/// `advantages` must already be standardized if that is wanted.
pub fn minibatch_gradient<T: Scalar>(
    policy: &PolicyParams<T>,
    buf: &RolloutBuffer,
    advantages: &[f64],
    idx: &[usize],
    cfg: &PpoConfig,
) -> MinibatchGrad<T> {
    let net = &policy.net;
    let params = &policy.params;
    let mut grads = vec![T::zero(); params.len()];
    let log_std = policy.log_std().as_f64();
    let inv_var = (-2.0 * log_std).exp();
    let scale = 1.0 / idx.len() as f64;
    let mut cache = ForwardCache::default();
    let mut input = vec![T::zero(); buf.obs[0].len()];
    let (mut pl, mut vl, mut kl) = (0.0, 0.0, 0.0);
    let mut clipped = 0;
    let mut d_log_std = 0.0;
    let mut entropy = 0.0;
    for &i in idx {
        for (d, s) in input.iter_mut().zip(&buf.obs[i]) {
            *d = T::lit(*s);
        }
        let (mean, value) = net.forward(params, &input, &mut cache);
        let (mean, value) = (mean.as_f64(), value.as_f64());
        let u = buf.actions[i];
        let logp = gaussian_log_prob(u, mean, log_std);
        let log_ratio = logp - buf.log_probs[i];
        let ratio = log_ratio.exp();
        let a = advantages[i];
        let s1 = ratio * a;
        let s2 = ratio.clamp(1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * a;
        pl -= s1.min(s2) * scale;
        // the clipped branch has zero gradient wrt the ratio
        let d_logp = if s2 < s1 {
            clipped += 1;
            0.0
        } else {
            -a * ratio
        };
        kl += ((ratio - 1.0) - log_ratio) * scale;
        let err = value - buf.returns[i];
        vl += err * err * scale;
        let (h, dh_mean, dh_ls) = squashed_entropy(mean, log_std);
        entropy += h * scale;
        let d_mean = (d_logp * (u - mean) * inv_var - cfg.ent_coef * dh_mean) * scale;
        let d_value = cfg.vf_coef * 2.0 * err * scale;
        d_log_std += (d_logp * ((u - mean).powi(2) * inv_var - 1.0) - cfg.ent_coef * dh_ls) * scale;
        net.backward(params, &cache, T::lit(d_mean), T::lit(d_value), &mut grads);
    }
    let ls = net.log_std_index();
    grads[ls] += T::lit(d_log_std);
    MinibatchGrad {
        grads,
        policy_loss: pl,
        value_loss: vl,
        entropy,
        approx_kl: kl,
        clipped,
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm<T: Scalar>(grads: &mut [T], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.as_f64() * g.as_f64()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = T::lit(max_norm / (norm + 1e-6));
        for g in grads.iter_mut() {
            *g *= k;
        }
    }
    norm
}

/// Runs the configured epochs of minibatch updates over a finished buffer.
pub fn ppo_update<T: Scalar, R: Rng>(
    policy: &mut PolicyParams<T>,
    buf: &RolloutBuffer,
    cfg: &PpoConfig,
    update_index: usize,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let n = buf.len();
    assert_eq!(buf.advantages.len(), n, "buffer has no advantages");
    let mut adv = buf.advantages.clone();
    if cfg.normalize_advantages {
        standardize(&mut adv);
    }
    let adam_cfg = cfg.adam();
    let mut order: Vec<usize> = (0..n).collect();
    let mb = n.div_ceil(cfg.minibatches);
    let mut stats = UpdateStats::default();
    let mut batches = 0usize;
    let mut clipped = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for idx in order.chunks(mb) {
            let mut g = minibatch_gradient(policy, buf, &adv, idx, cfg);
            let loss = g.policy_loss + cfg.vf_coef * g.value_loss - cfg.ent_coef * g.entropy;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    update: update_index,
                    detail: format!(
                        "policy {} value {} entropy {}",
                        g.policy_loss, g.value_loss, g.entropy
                    ),
                });
            }
            stats.grad_norm += clip_grad_norm(&mut g.grads, cfg.max_grad_norm);
            policy.adam.step(&adam_cfg, &mut policy.params, &g.grads, None)?;
            stats.policy_loss += g.policy_loss;
            stats.value_loss += g.value_loss;
            stats.entropy += g.entropy;
            stats.approx_kl += g.approx_kl;
            clipped += g.clipped;
            batches += 1;
        }
    }
    if batches > 0 {
        let b = batches as f64;
        stats.policy_loss /= b;
        stats.value_loss /= b;
        stats.entropy /= b;
        stats.approx_kl /= b;
        stats.grad_norm /= b;
        stats.clip_fraction = clipped as f64 / (batches * mb) as f64;
    }
    Ok(stats)
}
