//! Deterministic-capacity experiments.
//!
//! Throughput comes from a measured lookup table keyed by which UEs share a
//! network, instead of from the radio model. A few UEs learn where to go;
//! others are pinned to a network and only add contention.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error, Result};
use crate::policies::{Agent, EstimatorMode, Feedback, Observation, PolicySpec};
use crate::types::{AppId, AppProfile, ProviderId, UtilityKind};

use super::trace::stream;

/// Throughput of each UE on `network` when exactly the UEs in `ues` are
/// attached to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityEntry {
    pub network: usize,
    pub ues: Vec<usize>,
    /// Aligned with `ues`; `null` where the value was not measured.
    pub throughput: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapacityTable {
    pub entries: Vec<CapacityEntry>,
}

impl CapacityTable {
    pub fn new(entries: Vec<CapacityEntry>) -> Self {
        Self { entries }
    }

    /// Throughput of `ue` on `network` shared with exactly `attached`
    /// (order irrelevant).
    pub fn throughput(&self, network: usize, attached: &[usize], ue: usize) -> Option<f64> {
        let mut key = attached.to_vec();
        key.sort_unstable();
        self.entries.iter().find_map(|e| {
            let mut ues = e.ues.clone();
            ues.sort_unstable();
            if e.network != network || ues != key {
                return None;
            }
            let pos = e.ues.iter().position(|u| *u == ue)?;
            e.throughput.get(pos).copied().flatten()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestbedUe {
    pub app: UtilityKind,
    /// Whether an agent selects this UE's network.
    #[serde(default = "default_true")]
    pub dynamic: bool,
    /// Network of a non-dynamic UE.
    #[serde(default)]
    pub network: Option<usize>,
}

fn default_true() -> bool {
    true
}

fn default_repetitions() -> usize {
    200
}

fn default_training() -> usize {
    4
}

fn default_evaluation() -> usize {
    20
}

fn default_policy() -> PolicySpec {
    PolicySpec::ExpectedUtility {
        estimator: EstimatorMode::FullMean,
        epsilon: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestbedConfig {
    pub ues: Vec<TestbedUe>,
    /// Fixed price per network.
    pub prices: Vec<f64>,
    pub capacity: CapacityTable,
    #[serde(default = "default_training")]
    pub training_steps: usize,
    /// Greedy steps run after the last UE finishes training.
    #[serde(default = "default_evaluation")]
    pub evaluation_steps: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_policy")]
    pub policy: PolicySpec,
    /// Dynamic UE `i` trains for `training_steps + i` steps, so each UE's
    /// first greedy decisions see the others still exploring.
    #[serde(default = "default_true")]
    pub staggered: bool,
}

/// A joint assignment of dynamic UEs to networks and its aggregate utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub assignment: Vec<ProviderId>,
    pub value: f64,
}

impl TestbedConfig {
    /// Two learning UEs (batch, and interactive at 1 Mbps) next to a pinned
    /// interactive UE on network 2, with network prices 1 and 3.
    pub fn training_experiment() -> Self {
        let e = |network, ues: Vec<usize>, throughput: Vec<Option<f64>>| CapacityEntry {
            network,
            ues,
            throughput,
        };
        Self {
            ues: vec![
                TestbedUe {
                    app: UtilityKind::Batch,
                    dynamic: true,
                    network: None,
                },
                TestbedUe {
                    app: UtilityKind::interactive(1.0),
                    dynamic: true,
                    network: None,
                },
                TestbedUe {
                    app: UtilityKind::interactive(6.0),
                    dynamic: false,
                    network: Some(1),
                },
            ],
            prices: vec![1.0, 3.0],
            capacity: CapacityTable::new(vec![
                e(0, vec![0], vec![Some(1.7)]),
                e(0, vec![1], vec![Some(1.0)]),
                e(0, vec![0, 1], vec![Some(0.4), Some(1.0)]),
                e(1, vec![0, 2], vec![Some(4.5), None]),
                e(1, vec![1, 2], vec![Some(1.0), None]),
                e(1, vec![0, 1, 2], vec![Some(3.8), Some(1.0), None]),
            ]),
            training_steps: default_training(),
            evaluation_steps: default_evaluation(),
            repetitions: default_repetitions(),
            policy: default_policy(),
            staggered: true,
        }
    }

    pub fn providers(&self) -> usize {
        self.prices.len()
    }

    /// Indices of the UEs that select dynamically.
    pub fn dynamic_ues(&self) -> Vec<usize> {
        (0..self.ues.len())
            .filter(|i| self.ues[*i].dynamic)
            .collect()
    }

    /// Network of every UE given the choices of the dynamic ones.
    fn full_assignment(&self, dynamic_choice: &[usize]) -> Vec<usize> {
        let mut choices = dynamic_choice.iter();
        self.ues
            .iter()
            .map(|ue| {
                if ue.dynamic {
                    *choices.next().expect("one choice per dynamic UE")
                } else {
                    ue.network.unwrap_or(0)
                }
            })
            .collect()
    }

    /// Throughput of each dynamic UE under `dynamic_choice`.
    pub fn throughputs(&self, dynamic_choice: &[usize]) -> Result<Vec<f64>> {
        let full = self.full_assignment(dynamic_choice);
        self.dynamic_ues()
            .into_iter()
            .map(|ue| {
                let net = full[ue];
                let attached: Vec<usize> = (0..full.len()).filter(|u| full[*u] == net).collect();
                self.capacity.throughput(net, &attached, ue).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "capacity table has no throughput for UE {} on network {} shared with {:?}",
                        ue + 1,
                        net + 1,
                        attached.iter().map(|u| u + 1).collect::<Vec<_>>()
                    ))
                })
            })
            .collect()
    }

    /// Per-dynamic-UE utilities under `dynamic_choice`.
    pub fn utilities(&self, dynamic_choice: &[usize]) -> Result<Vec<f64>> {
        let tps = self.throughputs(dynamic_choice)?;
        Ok(self
            .dynamic_ues()
            .iter()
            .zip(dynamic_choice)
            .zip(tps)
            .map(|((ue, net), tp)| self.ues[*ue].app.utility(tp, self.prices[*net]))
            .collect())
    }

    pub fn aggregate_utility(&self, dynamic_choice: &[usize]) -> Result<f64> {
        Ok(self.utilities(dynamic_choice)?.iter().sum())
    }

    /// Mean throughput the `dyn_index`-th dynamic UE sees on `network` when
    /// every other dynamic UE picks a network uniformly at random.
    pub fn mean_throughput(&self, dyn_index: usize, network: usize) -> Result<f64> {
        let d = self.dynamic_ues().len();
        let k = self.providers();
        let mut total = 0.0;
        let mut count = 0usize;
        for choice in assignments(d, k) {
            if choice[dyn_index] == network {
                total += self.throughputs(&choice)?[dyn_index];
                count += 1;
            }
        }
        Ok(total / count as f64)
    }

    /// Utility the `dyn_index`-th dynamic UE expects from `network` after
    /// unbiased sampling.
    pub fn expected_utility(&self, dyn_index: usize, network: usize) -> Result<f64> {
        let ue = self.dynamic_ues()[dyn_index];
        let tp = self.mean_throughput(dyn_index, network)?;
        Ok(self.ues[ue].app.utility(tp, self.prices[network]))
    }

    pub fn optimal(&self) -> Result<Allocation> {
        optimal_allocation(self.dynamic_ues().len(), self.providers(), |a| {
            self.aggregate_utility(a)
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = "testbed";
        if self.prices.is_empty() || self.prices.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(ConfigError::invalid(
                "testbed.prices",
                "need one positive price per network",
            ));
        }
        if self.dynamic_ues().is_empty() {
            return Err(ConfigError::invalid(
                "testbed.ues",
                "at least one dynamic UE is required",
            ));
        }
        if self.repetitions == 0 {
            return Err(ConfigError::invalid(
                "testbed.repetitions",
                "must be at least 1",
            ));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            ue.app.validate(&format!("testbed.ues[{i}].app"))?;
            if !ue.dynamic && !matches!(ue.network, Some(n) if n < self.providers()) {
                return Err(ConfigError::invalid(
                    format!("testbed.ues[{i}].network"),
                    "a non-dynamic UE needs a valid network",
                ));
            }
        }
        self.policy
            .validate()
            .map_err(|e| ConfigError::invalid("testbed.policy", e.to_string()))?;
        for choice in assignments(self.dynamic_ues().len(), self.providers()) {
            self.throughputs(&choice)
                .map_err(|e| ConfigError::invalid(format!("{field}.capacity"), e.to_string()))?;
        }
        Ok(())
    }
}

/// All `k^d` assignments of `d` UEs to `k` networks in lexicographic order.
fn assignments(d: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = k.checked_pow(d as u32).expect("assignment space too large");
    (0..total).map(move |mut code| {
        let mut a = vec![0; d];
        for slot in a.iter_mut().rev() {
            *slot = code % k;
            code /= k;
        }
        a
    })
}

/// Exhaustive search over every assignment of `duts` devices to `providers`
/// networks. Ties go to the lexicographically smallest assignment.
pub fn optimal_allocation<F>(duts: usize, providers: usize, mut value: F) -> Result<Allocation>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if providers == 0 {
        return Err(Error::InvalidInput("no networks to allocate to".into()));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for a in assignments(duts, providers) {
        let v = value(&a)?;
        let better = match &best {
            None => true,
            Some((_, b)) => v > *b && (v - b) > 1e-12 * b.abs().max(1.0),
        };
        if better {
            best = Some((a, v));
        }
    }
    let (assignment, value) = best.expect("at least one assignment");
    Ok(Allocation {
        assignment: assignment.into_iter().map(ProviderId).collect(),
        value,
    })
}

/// Success probability after `s` random training samples.
pub fn theoretical_success(s: f64) -> f64 {
    1.0 - 0.5f64.powf(0.5 * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestbedResult {
    pub optimal: Allocation,
    pub repetitions: usize,
    /// Repetitions whose first all-greedy step hit the optimal assignment.
    pub successes: usize,
    pub success_rate: f64,
    /// Index of the first step on which no UE is training.
    pub measured_step: usize,
    /// Mean aggregate utility per step as a fraction of the optimum.
    pub utility_fraction: Vec<f64>,
}

const TESTBED_STREAM: u64 = 0x7e57;

/// Runs repeated train-then-exploit episodes against the capacity table.
pub fn testbed_mode(cfg: &TestbedConfig, seed: u64) -> Result<TestbedResult> {
    cfg.validate()?;
    let optimal = cfg.optimal()?;
    let dynamic = cfg.dynamic_ues();
    let k = cfg.providers();
    let stagger = if cfg.staggered { dynamic.len() - 1 } else { 0 };
    let measured_step = cfg.training_steps + stagger;
    let steps = measured_step + cfg.evaluation_steps.max(1);
    let levels: Vec<Vec<f64>> = cfg.prices.iter().map(|p| vec![*p]).collect();
    let ones = vec![1.0; k];
    let target: Vec<usize> = optimal.assignment.iter().map(|p| p.0).collect();

    let mut successes = 0;
    let mut fraction = vec![0.0; steps];
    for rep in 0..cfg.repetitions {
        let mut agents = dynamic
            .iter()
            .map(|ue| {
                Agent::new(
                    &cfg.policy,
                    &[AppProfile::new(0, cfg.ues[*ue].app)],
                    k,
                    &levels,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rngs: Vec<ChaCha8Rng> = (0..dynamic.len())
            .map(|i| stream(seed, TESTBED_STREAM + i as u64, rep as u64))
            .collect();
        for (step, frac) in fraction.iter_mut().enumerate() {
            let obs = Observation {
                app: AppId(0),
                prices: &cfg.prices,
                sinr: &ones,
            };
            let choice: Vec<usize> = agents
                .iter_mut()
                .zip(rngs.iter_mut())
                .enumerate()
                .map(|(i, (agent, rng))| {
                    let train = step < cfg.training_steps + if cfg.staggered { i } else { 0 };
                    agent.decide(&obs, train, rng).0
                })
                .collect();
            if step == measured_step && choice == target {
                successes += 1;
            }
            let tps = cfg.throughputs(&choice)?;
            let utils = cfg.utilities(&choice)?;
            *frac += utils.iter().sum::<f64>() / optimal.value;
            for (i, agent) in agents.iter_mut().enumerate() {
                agent.observe(&Feedback {
                    provider: ProviderId(choice[i]),
                    app: AppId(0),
                    throughput_mbps: tps[i],
                    price: cfg.prices[choice[i]],
                    reward: utils[i],
                });
            }
        }
    }
    let reps = cfg.repetitions as f64;
    Ok(TestbedResult {
        optimal,
        repetitions: cfg.repetitions,
        successes,
        success_rate: successes as f64 / reps,
        measured_step,
        utility_fraction: fraction.into_iter().map(|f| f / reps).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub training_steps: usize,
    pub repetitions: usize,
    pub success_rate: f64,
    pub theoretical: f64,
}

/// Success rate for each training length in `training_steps`.
pub fn training_sweep(
    cfg: &TestbedConfig,
    training_steps: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    training_steps
        .iter()
        .map(|&s| {
            let run = TestbedConfig {
                training_steps: s,
                evaluation_steps: 1,
                repetitions,
                ..cfg.clone()
            };
            let r = testbed_mode(&run, seed)?;
            Ok(SweepRow {
                training_steps: s,
                repetitions,
                success_rate: r.success_rate,
                theoretical: theoretical_success(s as f64),
            })
        })
        .collect()
}
