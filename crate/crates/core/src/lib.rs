//! `bandsim`: a desk-scale laboratory for mobile network provider selection.
//!
//! The crate bundles three things that are usually studied together:
//!
//! - **Selection agents** ([`policies`]): contextual Monte-Carlo bandits,
//!   windowed and exponentially smoothed estimators, tabular Q-learning over a
//!   reduced (app, provider) table, UCB, gradient bandits, SINR-weighted
//!   Q selection and the usual price/random baselines.
//! - **An LTE-like environment** ([`netsim`], [`demand`], [`dualspeed`]):
//!   hexagonal base-station grids per network, log-distance pathloss and SINR,
//!   equal-share contention, straight-path mobility, Markov app demand and
//!   popularity-driven price dynamics.
//! - **A spectrum-market ledger** ([`market`]): offers, allocations, deposits
//!   and withdrawals with epochs and fixed-point balances.
//!
//! The [`harness`] module ties them together into seeded, replayable
//! benchmarks: every policy in a run consumes the same price, app and mobility
//! trace, and the welfare series are compared with paired t-tests.

pub mod config;
pub mod demand;
pub mod dualspeed;
pub mod error;
pub mod harness;
pub mod market;
pub mod netsim;
pub mod policies;
pub mod rewards;
pub mod types;

pub use config::RunConfig;
pub use error::{ConfigError, Error};
pub use types::{
    decile_rank, AppId, AppProfile, Context, DecileHistory, ProviderId, RewardSample, UtilityKind,
};
