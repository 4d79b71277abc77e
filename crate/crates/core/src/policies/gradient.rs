//! Soft-max action preferences and the gradient bandit update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ProviderId;

/// What the soft-max is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SoftmaxInput {
    /// Raw preferences `h_a`.
    Preferences,
    /// Linear SINRs mapped through `H(x) = beta * ln x`.
    Sinr { beta: f64 },
}

/// Numerically stable soft-max: `exp(h_a - max h) / sum_i exp(h_i - max h)`.
pub fn softmax(h: &[f64]) -> Vec<f64> {
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = h.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax_policy(values: &[f64], input: SoftmaxInput) -> Result<Vec<f64>> {
    match input {
        SoftmaxInput::Preferences => Ok(softmax(values)),
        SoftmaxInput::Sinr { beta } => {
            if let Some(bad) = values.iter().find(|x| !x.is_finite() || **x <= 0.0) {
                return Err(Error::InvalidSinr(*bad));
            }
            let h: Vec<f64> = values.iter().map(|x| beta * x.ln()).collect();
            Ok(softmax(&h))
        }
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> ProviderId {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return ProviderId(i);
        }
    }
    ProviderId(probabilities.len() - 1)
}

/// How the reward baseline is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineMode {
    Arithmetic,
    Exponential { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceVector {
    h: Vec<f64>,
    step: f64,
    baseline_mode: BaselineMode,
    baseline: f64,
    rewards_seen: u64,
}

impl PreferenceVector {
    pub fn new(providers: usize, step: f64, baseline_mode: BaselineMode) -> Self {
        Self::with_preferences(vec![0.0; providers], step, baseline_mode)
    }

    pub fn with_preferences(h: Vec<f64>, step: f64, baseline_mode: BaselineMode) -> Self {
        assert!(!h.is_empty());
        Self {
            h,
            step,
            baseline_mode,
            baseline: 0.0,
            rewards_seen: 0,
        }
    }

    pub fn preferences(&self) -> &[f64] {
        &self.h
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn policy(&self) -> Vec<f64> {
        softmax(&self.h)
    }

    /// Gradient step on the preferences, then fold `reward` into the baseline.
    pub fn update(&mut self, chosen: ProviderId, reward: f64) {
        let pi = self.policy();
        let advantage = reward - self.baseline;
        for (a, (h, p)) in self.h.iter_mut().zip(&pi).enumerate() {
            let indicator = if a == chosen.0 { 1.0 } else { 0.0 };
            *h += self.step * advantage * (indicator - p);
        }
        self.rewards_seen += 1;
        match self.baseline_mode {
            BaselineMode::Arithmetic => {
                self.baseline += (reward - self.baseline) / self.rewards_seen as f64;
            }
            BaselineMode::Exponential { alpha } => {
                self.baseline = if self.rewards_seen == 1 {
                    reward
                } else {
                    self.baseline + alpha * (reward - self.baseline)
                };
            }
        }
    }
}

/// Functional form of [`PreferenceVector::update`].
pub fn gradient_update(
    mut pref: PreferenceVector,
    chosen: ProviderId,
    reward: f64,
) -> PreferenceVector {
    pref.update(chosen, reward);
    pref
}
