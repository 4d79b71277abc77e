//! Tabular Q-learning over the reduced (state, provider) table.
//!
//! Only the selected provider's state entry changes after an action, so the
//! full `n^k x k` table collapses to `rows x k`, where a row is an app (or an
//! (app, price level) pair). Selection looks up each provider in its own
//! current row.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::select::argmax_random;
use crate::error::{Error, Result};
use crate::types::ProviderId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    rows: usize,
    providers: usize,
    alpha: f64,
    gamma: f64,
    q: Vec<f64>,
}

impl QTable {
    /// `alpha` in `[0, 1]` (zero freezes the table), `gamma` in `[0, 1)`.
    pub fn new(rows: usize, providers: usize, alpha: f64, gamma: f64) -> Result<Self> {
        if rows == 0 || providers == 0 {
            return Err(Error::InvalidInput(
                "Q-table needs at least one row and column".into(),
            ));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidInput(format!(
                "gamma must lie in [0, 1), got {gamma}"
            )));
        }
        Ok(Self {
            rows,
            providers,
            alpha,
            gamma,
            q: vec![0.0; rows * providers],
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, alpha: f64, gamma: f64) -> Result<Self> {
        let providers = rows.first().map_or(0, Vec::len);
        let mut table = Self::new(rows.len(), providers, alpha, gamma)?;
        for (s, row) in rows.into_iter().enumerate() {
            if row.len() != providers {
                return Err(Error::InvalidInput("ragged Q-table rows".into()));
            }
            table.q[s * providers..(s + 1) * providers].copy_from_slice(&row);
        }
        Ok(table)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn providers(&self) -> usize {
        self.providers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn get(&self, state: usize, provider: ProviderId) -> f64 {
        self.q[state * self.providers + provider.0]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.q[state * self.providers..(state + 1) * self.providers]
    }

    fn max_row(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `q(s,a) += alpha * (r + gamma * max_a' q(s',a') - q(s,a))`.
    pub fn update(&mut self, state: usize, provider: ProviderId, reward: f64, next_state: usize) {
        let target = reward + self.gamma * self.max_row(next_state);
        let cell = &mut self.q[state * self.providers + provider.0];
        *cell += self.alpha * (target - *cell);
    }

    /// Values `q(key_a, a)` for each provider `a`.
    pub fn lookup(&self, keys: &[usize]) -> Vec<f64> {
        debug_assert_eq!(keys.len(), self.providers);
        keys.iter()
            .enumerate()
            .map(|(a, &s)| self.get(s, ProviderId(a)))
            .collect()
    }
}

/// Functional form of [`QTable::update`].
pub fn q_update(
    mut table: QTable,
    state: usize,
    provider: ProviderId,
    reward: f64,
    next_state: usize,
) -> QTable {
    table.update(state, provider, reward, next_state);
    table
}

/// `argmax_a q(key_a, a)`.
pub fn q_select<R: Rng + ?Sized>(table: &QTable, keys: &[usize], rng: &mut R) -> ProviderId {
    argmax_random(&table.lookup(keys), rng)
}

/// `argmax_a q(key_a, a) * pi(a)` with `pi` typically from
/// [`softmax_policy`](super::softmax_policy) in SINR mode.
pub fn q_sinr_select<R: Rng + ?Sized>(
    table: &QTable,
    keys: &[usize],
    probabilities: &[f64],
    rng: &mut R,
) -> ProviderId {
    debug_assert_eq!(probabilities.len(), table.providers());
    let scores: Vec<f64> = table
        .lookup(keys)
        .into_iter()
        .zip(probabilities)
        .map(|(q, p)| q * p)
        .collect();
    argmax_random(&scores, rng)
}
