use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::types::ProviderId;

/// How a cell of an [`ActionValueTable`] summarizes its observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorMode {
    /// Arithmetic mean over every observation.
    FullMean,
    /// Mean over the last `w` observations.
    Window { w: usize },
    /// Exponential smoothing; the first observation seeds the estimate.
    Exponential { alpha: f64 },
}

impl EstimatorMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorMode::FullMean => Ok(()),
            EstimatorMode::Window { w } if w >= 1 => Ok(()),
            EstimatorMode::Window { .. } => {
                Err(Error::InvalidInput("window must be at least 1".into()))
            }
            EstimatorMode::Exponential { alpha } if alpha > 0.0 && alpha < 1.0 => Ok(()),
            EstimatorMode::Exponential { alpha } => Err(Error::InvalidInput(format!(
                "exponential smoothing coefficient must lie in (0, 1), got {alpha}"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorMode::FullMean => "unlimited".to_string(),
            EstimatorMode::Window { w } => format!("{w}-period"),
            EstimatorMode::Exponential { alpha } => format!("exp-{alpha}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Cell {
    count: u64,
    sum: f64,
    recent: VecDeque<f64>,
    smoothed: f64,
}

/// Per-(context, provider) action-value estimates with pull counts.
///
/// Cells with no observations are valued at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionValueTable {
    mode: EstimatorMode,
    contexts: usize,
    providers: usize,
    cells: Vec<Cell>,
}

impl ActionValueTable {
    pub fn new(contexts: usize, providers: usize, mode: EstimatorMode) -> Self {
        assert!(
            contexts > 0 && providers > 0,
            "table needs at least one context and provider"
        );
        Self {
            mode,
            contexts,
            providers,
            cells: vec![Cell::default(); contexts * providers],
        }
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn providers(&self) -> usize {
        self.providers
    }

    fn cell(&self, context: usize, provider: ProviderId) -> &Cell {
        &self.cells[context * self.providers + provider.0]
    }

    pub fn record(&mut self, context: usize, provider: ProviderId, value: f64) {
        let mode = self.mode;
        let cell = &mut self.cells[context * self.providers + provider.0];
        cell.count += 1;
        cell.sum += value;
        match mode {
            EstimatorMode::FullMean => {}
            EstimatorMode::Window { w } => {
                if cell.recent.len() == w {
                    cell.recent.pop_front();
                }
                cell.recent.push_back(value);
            }
            EstimatorMode::Exponential { alpha } => {
                cell.smoothed = if cell.count == 1 {
                    value
                } else {
                    cell.smoothed + alpha * (value - cell.smoothed)
                };
            }
        }
    }

    pub fn count(&self, context: usize, provider: ProviderId) -> u64 {
        self.cell(context, provider).count
    }

    pub fn value(&self, context: usize, provider: ProviderId) -> f64 {
        let cell = self.cell(context, provider);
        if cell.count == 0 {
            return 0.0;
        }
        match self.mode {
            EstimatorMode::FullMean => cell.sum / cell.count as f64,
            EstimatorMode::Window { .. } => {
                cell.recent.iter().sum::<f64>() / cell.recent.len() as f64
            }
            EstimatorMode::Exponential { .. } => cell.smoothed,
        }
    }

    pub fn values(&self, context: usize) -> Vec<f64> {
        (0..self.providers)
            .map(|a| self.value(context, ProviderId(a)))
            .collect()
    }

    pub fn counts(&self, context: usize) -> Vec<u64> {
        (0..self.providers)
            .map(|a| self.count(context, ProviderId(a)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_cells_are_zero() {
        let t = ActionValueTable::new(2, 3, EstimatorMode::FullMean);
        assert_eq!(t.values(1), vec![0.0; 3]);
        assert_eq!(t.counts(0), vec![0; 3]);
    }

    #[test]
    fn window_keeps_latest_values() {
        let mut t = ActionValueTable::new(1, 1, EstimatorMode::Window { w: 2 });
        for v in [10.0, 2.0, 4.0] {
            t.record(0, ProviderId(0), v);
        }
        assert_eq!(t.value(0, ProviderId(0)), 3.0);
        assert_eq!(t.count(0, ProviderId(0)), 3);
    }

    #[test]
    fn exponential_seeds_with_first_sample() {
        let mut t = ActionValueTable::new(1, 1, EstimatorMode::Exponential { alpha: 0.5 });
        t.record(0, ProviderId(0), 4.0);
        assert_eq!(t.value(0, ProviderId(0)), 4.0);
        t.record(0, ProviderId(0), 0.0);
        assert_eq!(t.value(0, ProviderId(0)), 2.0);
    }

    #[test]
    fn invalid_modes_are_rejected() {
        assert!(EstimatorMode::Window { w: 0 }.validate().is_err());
        assert!(EstimatorMode::Exponential { alpha: 1.0 }
            .validate()
            .is_err());
        assert!(EstimatorMode::Exponential { alpha: 0.3 }.validate().is_ok());
    }

    proptest! {
        #[test]
        fn cells_match_brute_force(
            log in prop::collection::vec((0usize..3, 0usize..2, -10.0f64..10.0), 0..200),
            w in 1usize..5,
        ) {
            let mut full = ActionValueTable::new(3, 2, EstimatorMode::FullMean);
            let mut win = ActionValueTable::new(3, 2, EstimatorMode::Window { w });
            for &(s, a, r) in &log {
                full.record(s, ProviderId(a), r);
                win.record(s, ProviderId(a), r);
            }
            for s in 0..3 {
                for a in 0..2 {
                    let rewards: Vec<f64> = log.iter().filter(|e| e.0 == s && e.1 == a).map(|e| e.2).collect();
                    prop_assert_eq!(full.count(s, ProviderId(a)), rewards.len() as u64);
                    let mean = if rewards.is_empty() { 0.0 } else { rewards.iter().sum::<f64>() / rewards.len() as f64 };
                    prop_assert!((full.value(s, ProviderId(a)) - mean).abs() < 1e-9);
                    let tail = &rewards[rewards.len().saturating_sub(w)..];
                    let wmean = if tail.is_empty() { 0.0 } else { tail.iter().sum::<f64>() / tail.len() as f64 };
                    prop_assert!((win.value(s, ProviderId(a)) - wmean).abs() < 1e-9);
                }
            }
        }
    }
}
