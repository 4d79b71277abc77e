//! Dual-speed price dynamics.
//!
//! A provider selected by more than `popularity_threshold` agents changes
//! price under `p_pop`; otherwise it moves under the lazier
//! `P_unp = I - diag(eps) + diag(eps) P_pop`. Every provider transitions on
//! every step, selected or not.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{sample_row, validate_stochastic};
use crate::error::{Error, Result};

/// `I - diag(eps) + diag(eps) * p_pop`.
pub fn unpopular_matrix(p_pop: &[Vec<f64>], epsilons: &[f64]) -> Vec<Vec<f64>> {
    assert_eq!(p_pop.len(), epsilons.len(), "one epsilon per price state");
    p_pop
        .iter()
        .zip(epsilons)
        .enumerate()
        .map(|(i, (row, eps))| {
            row.iter()
                .enumerate()
                .map(|(j, p)| {
                    let identity = if i == j { 1.0 } else { 0.0 };
                    identity - eps * identity + eps * p
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSpeedModel {
    pub p_pop: Vec<Vec<f64>>,
    pub epsilons: Vec<f64>,
    /// A provider is popular when strictly more agents than this selected it.
    pub popularity_threshold: u32,
    pub price_labels: Vec<f64>,
    #[serde(skip)]
    p_unp: Vec<Vec<f64>>,
}

impl DualSpeedModel {
    pub fn new(
        p_pop: Vec<Vec<f64>>,
        epsilons: Vec<f64>,
        popularity_threshold: u32,
        price_labels: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self {
            p_pop,
            epsilons,
            popularity_threshold,
            price_labels,
            p_unp: Vec::new(),
        };
        model.prepare()?;
        Ok(model)
    }

    /// Validates the model and caches the unpopular matrix. Needed after
    /// deserializing.
    pub fn prepare(&mut self) -> Result<()> {
        validate_stochastic(&self.p_pop)?;
        let n = self.p_pop.len();
        if self.epsilons.len() != n || self.price_labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "dual-speed model with {n} price states needs {n} epsilons and {n} price labels"
            )));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "epsilon must lie in (0, 1], got {e}"
            )));
        }
        if let Some(p) = self
            .price_labels
            .iter()
            .find(|p| !p.is_finite() || **p <= 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "price labels must be positive, got {p}"
            )));
        }
        self.p_unp = unpopular_matrix(&self.p_pop, &self.epsilons);
        Ok(())
    }

    pub fn p_unp(&self) -> &[Vec<f64>] {
        &self.p_unp
    }

    pub fn states(&self) -> usize {
        self.p_pop.len()
    }

    pub fn price(&self, state: usize) -> f64 {
        self.price_labels[state]
    }

    pub fn is_popular(&self, selections: u32) -> bool {
        selections > self.popularity_threshold
    }

    /// Transition of one provider's price state given a uniform variate.
    pub fn step_with(&self, state: usize, selections: u32, u: f64) -> usize {
        let matrix = if self.is_popular(selections) {
            &self.p_pop
        } else {
            &self.p_unp
        };
        sample_row(&matrix[state], u)
    }
}

/// Moves every provider's price state one step.
pub fn step_prices<R: Rng + ?Sized>(
    model: &DualSpeedModel,
    states: &[usize],
    selections: &[u32],
    rng: &mut R,
) -> Vec<usize> {
    states
        .iter()
        .zip(selections)
        .map(|(&s, &count)| model.step_with(s, count, rng.random()))
        .collect()
}
