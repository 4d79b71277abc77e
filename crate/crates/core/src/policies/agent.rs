//! Stateful per-DUT agents built from a [`PolicySpec`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::estimator::{ActionValueTable, EstimatorMode};
use super::gradient::{sample_index, softmax_policy, BaselineMode, PreferenceVector, SoftmaxInput};
use super::qlearning::{q_select, q_sinr_select, QTable};
use super::select::{
    epsilon_greedy, expected_utility_select, history_select, lowest_price_select, random_select,
    ucb_select,
};
use crate::error::{Error, Result};
use crate::types::{AppId, AppProfile, Context, ProviderId};

fn default_eu_estimator() -> EstimatorMode {
    EstimatorMode::Window { w: 2 }
}

fn default_full_mean() -> EstimatorMode {
    EstimatorMode::FullMean
}

fn default_alpha() -> f64 {
    0.2
}

fn default_gamma() -> f64 {
    0.7
}

fn default_one() -> f64 {
    1.0
}

fn default_step() -> f64 {
    0.1
}

fn default_baseline() -> BaselineMode {
    BaselineMode::Arithmetic
}

/// Row keying of the Q-table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RlState {
    /// One row per app (`n x k`).
    #[default]
    App,
    /// One row per (app, price level) pair (`n*m x k`).
    AppPrice,
}

/// Serializable description of a provider-selection policy and its
/// hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    ExpectedUtility {
        #[serde(default = "default_eu_estimator")]
        estimator: EstimatorMode,
        #[serde(default)]
        epsilon: f64,
    },
    History {
        #[serde(default = "default_full_mean")]
        estimator: EstimatorMode,
        #[serde(default)]
        epsilon: f64,
    },
    Rl {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        state: RlState,
        #[serde(default)]
        epsilon: f64,
    },
    RlSinr {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_one")]
        beta: f64,
        #[serde(default)]
        state: RlState,
    },
    Ucb {
        #[serde(default = "default_one")]
        c: f64,
        #[serde(default = "default_full_mean")]
        estimator: EstimatorMode,
    },
    Gradient {
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_baseline")]
        baseline: BaselineMode,
    },
    LowestPrice {},
    Random {},
}

impl PolicySpec {
    pub fn expected_utility() -> Self {
        PolicySpec::ExpectedUtility {
            estimator: default_eu_estimator(),
            epsilon: 0.0,
        }
    }

    pub fn history() -> Self {
        PolicySpec::History {
            estimator: EstimatorMode::FullMean,
            epsilon: 0.0,
        }
    }

    pub fn rl() -> Self {
        PolicySpec::Rl {
            alpha: default_alpha(),
            gamma: default_gamma(),
            state: RlState::App,
            epsilon: 0.0,
        }
    }

    /// The five benchmarks compared in every simulation family.
    pub fn benchmark_set() -> Vec<PolicySpec> {
        vec![
            Self::expected_utility(),
            Self::history(),
            Self::rl(),
            PolicySpec::LowestPrice {},
            PolicySpec::Random {},
        ]
    }

    /// Parses a short policy name as accepted on the command line.
    pub fn from_name(name: &str) -> Option<Self> {
        let spec = match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "expected_utility" | "expectedutility" | "eu" => Self::expected_utility(),
            "history" => Self::history(),
            "rl" => Self::rl(),
            "rl_sinr" | "rlsinr" => PolicySpec::RlSinr {
                alpha: default_alpha(),
                gamma: default_gamma(),
                beta: 1.0,
                state: RlState::App,
            },
            "ucb" => PolicySpec::Ucb {
                c: 1.0,
                estimator: EstimatorMode::FullMean,
            },
            "gradient" => PolicySpec::Gradient {
                step: default_step(),
                baseline: BaselineMode::Arithmetic,
            },
            "lowest_price" | "lowestprice" => PolicySpec::LowestPrice {},
            "random" => PolicySpec::Random {},
            _ => return None,
        };
        Some(spec)
    }

    /// Display label used in output files.
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::ExpectedUtility { .. } => "ExpectedUtility",
            PolicySpec::History { .. } => "History",
            PolicySpec::Rl { .. } => "RL",
            PolicySpec::RlSinr { .. } => "RLSinr",
            PolicySpec::Ucb { .. } => "UCB",
            PolicySpec::Gradient { .. } => "Gradient",
            PolicySpec::LowestPrice {} => "LowestPrice",
            PolicySpec::Random {} => "Random",
        }
    }

    /// Whether the policy runs the random training phase before acting greedily.
    pub fn learns(&self) -> bool {
        !matches!(self, PolicySpec::LowestPrice {} | PolicySpec::Random {})
    }

    pub fn validate(&self) -> Result<()> {
        let check_eps = |e: f64| {
            if (0.0..=1.0).contains(&e) {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "epsilon must lie in [0, 1], got {e}"
                )))
            }
        };
        match *self {
            PolicySpec::ExpectedUtility { estimator, epsilon }
            | PolicySpec::History { estimator, epsilon } => {
                estimator.validate()?;
                check_eps(epsilon)
            }
            PolicySpec::Rl {
                alpha,
                gamma,
                epsilon,
                ..
            } => {
                QTable::new(1, 1, alpha, gamma)?;
                check_eps(epsilon)
            }
            PolicySpec::RlSinr {
                alpha, gamma, beta, ..
            } => {
                QTable::new(1, 1, alpha, gamma)?;
                if beta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("beta must be positive".into()))
                }
            }
            PolicySpec::Ucb { c, estimator } => {
                estimator.validate()?;
                if c >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(
                        "UCB constant must be non-negative".into(),
                    ))
                }
            }
            PolicySpec::Gradient { step, baseline } => {
                if let BaselineMode::Exponential { alpha } = baseline {
                    if !(alpha > 0.0 && alpha < 1.0) {
                        return Err(Error::InvalidInput(
                            "baseline smoothing must lie in (0, 1)".into(),
                        ));
                    }
                }
                if step > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("gradient step must be positive".into()))
                }
            }
            PolicySpec::LowestPrice {} | PolicySpec::Random {} => Ok(()),
        }
    }
}

/// What an agent knows when it has to decide.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub app: AppId,
    pub prices: &'a [f64],
    /// Linear SINR per provider at the device's position.
    pub sinr: &'a [f64],
}

/// What the agent learns after its purchase was served.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    pub provider: ProviderId,
    pub app: AppId,
    pub throughput_mbps: f64,
    pub price: f64,
    /// Learning signal (utility, or a decile-based reward).
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceKeys {
    mode: RlState,
    levels: Vec<Vec<f64>>,
    width: usize,
}

impl PriceKeys {
    fn new(mode: RlState, levels: Vec<Vec<f64>>) -> Self {
        let width = levels.iter().map(Vec::len).max().unwrap_or(1).max(1);
        Self {
            mode,
            levels,
            width,
        }
    }

    fn rows(&self, apps: usize) -> usize {
        match self.mode {
            RlState::App => apps,
            RlState::AppPrice => apps * self.width,
        }
    }

    fn level(&self, provider: usize, price: f64) -> usize {
        let Some(levels) = self.levels.get(provider).filter(|l| !l.is_empty()) else {
            return 0;
        };
        let mut best = 0;
        for (i, l) in levels.iter().enumerate() {
            if (l - price).abs() < (levels[best] - price).abs() {
                best = i;
            }
        }
        best
    }

    fn key(&self, app: AppId, provider: usize, price: f64) -> usize {
        match self.mode {
            RlState::App => app.0,
            RlState::AppPrice => app.0 * self.width + self.level(provider, price),
        }
    }

    fn keys(&self, obs: &Observation<'_>) -> Vec<usize> {
        (0..obs.prices.len())
            .map(|a| self.key(obs.app, a, obs.prices[a]))
            .collect()
    }
}

/// A provider-selection agent owned by one DUT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum Agent {
    ExpectedUtility {
        apps: Vec<AppProfile>,
        throughput: ActionValueTable,
        epsilon: f64,
    },
    History {
        rewards: ActionValueTable,
        epsilon: f64,
    },
    Rl {
        q: QTable,
        keys: PriceKeys,
        epsilon: f64,
        sinr_beta: Option<f64>,
        pending: Option<(usize, ProviderId, f64)>,
    },
    Ucb {
        rewards: ActionValueTable,
        c: f64,
        t: u64,
    },
    Gradient {
        prefs: Vec<PreferenceVector>,
    },
    LowestPrice,
    Random {
        providers: usize,
    },
}

impl Agent {
    /// Builds a fresh agent for a DUT running `apps` against `providers`
    /// networks. `price_levels[a]` lists provider `a`'s possible prices and is
    /// only consulted for (app, price) Q-table keying.
    pub fn new(
        spec: &PolicySpec,
        apps: &[AppProfile],
        providers: usize,
        price_levels: &[Vec<f64>],
    ) -> Result<Self> {
        spec.validate()?;
        let n = apps.len().max(1);
        let agent = match *spec {
            PolicySpec::ExpectedUtility { estimator, epsilon } => Agent::ExpectedUtility {
                apps: apps.to_vec(),
                throughput: ActionValueTable::new(n, providers, estimator),
                epsilon,
            },
            PolicySpec::History { estimator, epsilon } => Agent::History {
                rewards: ActionValueTable::new(1, providers, estimator),
                epsilon,
            },
            PolicySpec::Rl {
                alpha,
                gamma,
                state,
                epsilon,
            } => {
                let keys = PriceKeys::new(state, price_levels.to_vec());
                Agent::Rl {
                    q: QTable::new(keys.rows(n), providers, alpha, gamma)?,
                    keys,
                    epsilon,
                    sinr_beta: None,
                    pending: None,
                }
            }
            PolicySpec::RlSinr {
                alpha,
                gamma,
                beta,
                state,
            } => {
                let keys = PriceKeys::new(state, price_levels.to_vec());
                Agent::Rl {
                    q: QTable::new(keys.rows(n), providers, alpha, gamma)?,
                    keys,
                    epsilon: 0.0,
                    sinr_beta: Some(beta),
                    pending: None,
                }
            }
            PolicySpec::Ucb { c, estimator } => Agent::Ucb {
                rewards: ActionValueTable::new(n, providers, estimator),
                c,
                t: 0,
            },
            PolicySpec::Gradient { step, baseline } => Agent::Gradient {
                prefs: vec![PreferenceVector::new(providers, step, baseline); n],
            },
            PolicySpec::LowestPrice {} => Agent::LowestPrice,
            PolicySpec::Random {} => Agent::Random { providers },
        };
        Ok(agent)
    }

    /// Picks a provider. With `explore` set the choice is uniform (training),
    /// but any deferred learning from the previous step still happens.
    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation<'_>,
        explore: bool,
        rng: &mut R,
    ) -> ProviderId {
        let k = obs.prices.len();
        if let Agent::Rl {
            q, keys, pending, ..
        } = self
        {
            if let Some((state, provider, reward)) = pending.take() {
                let next = keys.key(obs.app, provider.0, obs.prices[provider.0]);
                q.update(state, provider, reward, next);
            }
        }
        if explore {
            return random_select(k, rng);
        }
        match self {
            Agent::ExpectedUtility {
                apps,
                throughput,
                epsilon,
            } => {
                let ctx = Context {
                    app: obs.app,
                    prices: obs.prices.to_vec(),
                };
                let app = &apps[obs.app.0];
                epsilon_greedy(
                    |r| expected_utility_select(throughput, &ctx, app, r),
                    *epsilon,
                    k,
                    rng,
                )
            }
            Agent::History { rewards, epsilon } => {
                epsilon_greedy(|r| history_select(rewards, r), *epsilon, k, rng)
            }
            Agent::Rl {
                q,
                keys,
                epsilon,
                sinr_beta,
                ..
            } => {
                let row_keys = keys.keys(obs);
                match sinr_beta {
                    Some(beta) => {
                        match softmax_policy(obs.sinr, SoftmaxInput::Sinr { beta: *beta }) {
                            Ok(pi) => q_sinr_select(q, &row_keys, &pi, rng),
                            Err(_) => q_select(q, &row_keys, rng),
                        }
                    }
                    None => epsilon_greedy(|r| q_select(q, &row_keys, r), *epsilon, k, rng),
                }
            }
            Agent::Ucb { rewards, c, t } => {
                *t += 1;
                ucb_select(rewards, obs.app.0, *t, *c, rng)
            }
            Agent::Gradient { prefs } => sample_index(&prefs[obs.app.0].policy(), rng),
            Agent::LowestPrice => {
                let ctx = Context {
                    app: obs.app,
                    prices: obs.prices.to_vec(),
                };
                lowest_price_select(&ctx, rng)
            }
            Agent::Random { providers } => random_select(*providers, rng),
        }
    }

    pub fn observe(&mut self, feedback: &Feedback) {
        match self {
            Agent::ExpectedUtility { throughput, .. } => {
                throughput.record(feedback.app.0, feedback.provider, feedback.throughput_mbps)
            }
            Agent::History { rewards, .. } => rewards.record(0, feedback.provider, feedback.reward),
            Agent::Rl { keys, pending, .. } => {
                let state = keys.key(feedback.app, feedback.provider.0, feedback.price);
                *pending = Some((state, feedback.provider, feedback.reward));
            }
            Agent::Ucb { rewards, .. } => {
                rewards.record(feedback.app.0, feedback.provider, feedback.reward)
            }
            Agent::Gradient { prefs } => {
                prefs[feedback.app.0].update(feedback.provider, feedback.reward)
            }
            Agent::LowestPrice | Agent::Random { .. } => {}
        }
    }

    /// JSON checkpoint of the learned state.
    pub fn checkpoint(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("agent state is always serializable")
    }

    pub fn restore(value: serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(value)?)
    }
}
