//! Shared domain vocabulary: identifiers, app profiles, contexts, reward
//! samples and decile ranking of QoE observations.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Zero-based provider (network) index. Rendered one-based in outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProviderId(pub usize);

/// Zero-based app index within a DUT's demand profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AppId(pub usize);

impl ProviderId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl AppId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// How an app converts delivered throughput into utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityKind {
    /// Utility is throughput over price, uncapped.
    Batch,
    /// Full reward once `threshold_mbps` is delivered, a small floor otherwise.
    Interactive {
        threshold_mbps: f64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
}

pub(crate) fn default_floor() -> f64 {
    crate::rewards::DEFAULT_INTERACTIVE_FLOOR
}

impl UtilityKind {
    pub fn interactive(threshold_mbps: f64) -> Self {
        UtilityKind::Interactive {
            threshold_mbps,
            floor: default_floor(),
        }
    }

    pub fn threshold_mbps(&self) -> Option<f64> {
        match self {
            UtilityKind::Batch => None,
            UtilityKind::Interactive { threshold_mbps, .. } => Some(*threshold_mbps),
        }
    }

    /// Utility of `throughput_mbps` bought at `price`.
    pub fn utility(&self, throughput_mbps: f64, price: f64) -> f64 {
        match *self {
            UtilityKind::Batch => crate::rewards::batch_utility(throughput_mbps, price),
            UtilityKind::Interactive {
                threshold_mbps,
                floor,
            } => crate::rewards::interactive_utility(throughput_mbps, threshold_mbps, price, floor),
        }
    }

    pub(crate) fn validate(&self, field: &str) -> std::result::Result<(), crate::ConfigError> {
        if let UtilityKind::Interactive {
            threshold_mbps,
            floor,
        } = *self
        {
            if !(threshold_mbps > 0.0 && threshold_mbps.is_finite()) {
                return Err(crate::ConfigError::invalid(
                    field,
                    "interactive threshold must be positive",
                ));
            }
            if !(floor > 0.0 && floor < threshold_mbps) {
                return Err(crate::ConfigError::invalid(
                    field,
                    "interactive floor must lie in (0, threshold)",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppProfile {
    pub id: AppId,
    pub kind: UtilityKind,
}

impl AppProfile {
    pub fn new(id: usize, kind: UtilityKind) -> Self {
        Self {
            id: AppId(id),
            kind,
        }
    }

    pub fn utility(&self, throughput_mbps: f64, price: f64) -> f64 {
        self.kind.utility(throughput_mbps, price)
    }
}

/// What an agent sees before choosing: the launched app and every
/// provider's current price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub app: AppId,
    pub prices: Vec<f64>,
}

impl Context {
    pub fn new(app: AppId, prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::InvalidInput(
                "context needs at least one price".into(),
            ));
        }
        if let Some(p) = prices.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "price must be positive, got {p}"
            )));
        }
        Ok(Self { app, prices })
    }

    pub fn providers(&self) -> usize {
        self.prices.len()
    }

    /// The reduced context an agent needs once it has picked `provider`.
    pub fn reduced(&self, provider: ProviderId) -> (AppId, f64) {
        (self.app, self.prices[provider.0])
    }
}

/// One realized interaction: what was bought, what was delivered, what it was worth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    pub provider: ProviderId,
    pub app: AppId,
    pub throughput_mbps: f64,
    pub price: f64,
    pub reward: f64,
}

/// Past QoE observations for one (app, provider) pair, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecileHistory {
    values: Vec<f64>,
}

impl DecileHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::new();
        for v in values {
            h.push(v);
        }
        h
    }

    pub fn push(&mut self, x: f64) {
        let at = self.values.partition_point(|v| *v <= x);
        self.values.insert(at, x);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Decile rank of `x` against this history. See [`decile_rank`].
    pub fn rank(&self, x: f64) -> Result<u8> {
        decile_rank(self, x)
    }
}

/// Decile rank in `1..=10` of `x` against the empirical distribution in `history`.
///
/// Uses the "fraction of history values `<= x`" CDF, scaled by ten, rounded
/// up and clamped to `[1, 10]`.
pub fn decile_rank(history: &DecileHistory, x: f64) -> Result<u8> {
    if history.is_empty() {
        return Err(Error::NoDistribution);
    }
    let at_or_below = history.values.partition_point(|v| *v <= x);
    let cdf = at_or_below as f64 / history.len() as f64;
    // Integer arithmetic keeps exact decile boundaries (e.g. 55/100) exact.
    let rank = (at_or_below * 10).div_ceil(history.len());
    debug_assert!((rank as f64 - (10.0 * cdf).ceil()).abs() < 1e-9);
    Ok(rank.clamp(1, 10) as u8)
}
