//! App demand as a Markov chain over a DUT's app profiles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AppId, AppProfile};

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppChain {
    apps: Vec<AppProfile>,
    transition: Vec<Vec<f64>>,
    current: AppId,
}

/// Checks that `m` is square and row-stochastic within 1e-9.
pub fn validate_stochastic(m: &[Vec<f64>]) -> Result<()> {
    let n = m.len();
    if n == 0 {
        return Err(Error::InvalidInput("transition matrix is empty".into()));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return Err(Error::InvalidInput(format!(
                "row {i} has entries outside [0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "row {i} sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

/// Draws the next state from `row` with a single uniform variate.
pub fn sample_row(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding slack: last state with positive mass
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

/// Stationary distribution of a row-stochastic matrix by power iteration on
/// the lazy chain `(I + P) / 2`, which converges for periodic chains too.
pub fn stationary_distribution(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for (i, row) in m.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                next[j] += pi[i] * 0.5 * (p + if i == j { 1.0 } else { 0.0 });
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.into_iter().map(|p| p / total).collect()
}

impl AppChain {
    pub fn new(apps: Vec<AppProfile>, transition: Vec<Vec<f64>>, initial: AppId) -> Result<Self> {
        validate_stochastic(&transition)?;
        if transition.len() != apps.len() {
            return Err(Error::InvalidInput(format!(
                "{} apps but a {}x{} transition matrix",
                apps.len(),
                transition.len(),
                transition.len()
            )));
        }
        if initial.0 >= apps.len() {
            return Err(Error::InvalidInput("initial app out of range".into()));
        }
        Ok(Self {
            apps,
            transition,
            current: initial,
        })
    }

    /// Starts the chain from a draw of its stationary distribution.
    pub fn from_stationary<R: Rng + ?Sized>(
        apps: Vec<AppProfile>,
        transition: Vec<Vec<f64>>,
        rng: &mut R,
    ) -> Result<Self> {
        validate_stochastic(&transition)?;
        let pi = stationary_distribution(&transition);
        let initial = AppId(sample_row(&pi, rng.random()));
        Self::new(apps, transition, initial)
    }

    pub fn apps(&self) -> &[AppProfile] {
        &self.apps
    }

    pub fn current(&self) -> AppId {
        self.current
    }

    pub fn current_profile(&self) -> &AppProfile {
        &self.apps[self.current.0]
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn next_app<R: Rng + ?Sized>(&mut self, rng: &mut R) -> AppId {
        let u = rng.random();
        self.current = AppId(sample_row(&self.transition[self.current.0], u));
        self.current
    }
}
