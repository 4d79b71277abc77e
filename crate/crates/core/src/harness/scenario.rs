use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RewardMode, RunConfig};
use crate::dualspeed::DualSpeedModel;
use crate::error::{Error, Result};
use crate::market::{Ledger, Tokens, TxPayload};
use crate::netsim::{max_throughput, NetworkModel};
use crate::policies::{Agent, EstimatorMode, Feedback, Observation, PolicySpec};
use crate::types::{AppId, AppProfile, DecileHistory, ProviderId};

use super::stats::{improvement, mean, welfare_t_test};
use super::trace::{purpose, stream, ScenarioTrace};

const EXCHANGE: &str = "exchange";

/// One DUT's decision and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iter: usize,
    pub step: usize,
    pub dut: usize,
    pub policy: String,
    pub provider: ProviderId,
    pub app: AppId,
    pub price: f64,
    pub throughput_mbps: f64,
    /// Realized utility; the welfare contribution of this decision.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub iterations: usize,
    pub policies: Vec<String>,
    /// `[policy][iteration]` social welfare.
    pub welfare: Vec<Vec<f64>>,
    /// `[policy][iteration]` discounted return of the utility stream, summed
    /// over DUTs.
    pub discounted_return: Vec<Vec<f64>>,
    /// `[policy][provider]` selection counts over all steps and iterations.
    pub selections: Vec<Vec<u64>>,
    /// Per-step records, ordered by iteration, policy, step and DUT. Empty
    /// unless requested.
    pub records: Vec<StepRecord>,
}

impl RunResult {
    pub fn mean_welfare(&self, policy: usize) -> f64 {
        mean(&self.welfare[policy])
    }

    pub fn policy_index(&self, name: &str) -> Option<usize> {
        self.policies.iter().position(|p| p == name)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `general.iterations`.
    pub iterations: Option<usize>,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    pub keep_steps: bool,
}

/// Output names for a policy list, unique within the list.
pub fn policy_names(policies: &[PolicySpec]) -> Vec<String> {
    let mut names: Vec<String> = policies
        .iter()
        .map(|p| {
            let base = p.label().to_string();
            match p {
                PolicySpec::ExpectedUtility { estimator, .. }
                    if *estimator != (EstimatorMode::Window { w: 2 }) =>
                {
                    format!("{base}({})", estimator.label())
                }
                PolicySpec::History { estimator, .. } if *estimator != EstimatorMode::FullMean => {
                    format!("{base}({})", estimator.label())
                }
                _ => base,
            }
        })
        .collect();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for name in &mut names {
        let n = seen.entry(name.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            name.push_str(&format!("#{n}"));
        }
    }
    names
}

struct Setup<'a> {
    cfg: &'a RunConfig,
    networks: Vec<NetworkModel>,
    profiles: Vec<Vec<AppProfile>>,
    price_levels: Vec<Vec<f64>>,
    dual_speed: Option<DualSpeedModel>,
    names: Vec<String>,
    funding: Tokens,
}

struct PolicyRun {
    welfare: f64,
    discounted: f64,
    selections: Vec<u64>,
    records: Vec<StepRecord>,
}

fn tokens(price: f64) -> Tokens {
    Tokens::from_cents((price * 100.0).round() as i64)
}

fn account(prefix: &str, index: usize) -> String {
    format!("{prefix}-{}", index + 1)
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a RunConfig, policies: &[PolicySpec]) -> Result<Self> {
        cfg.validate()?;
        for p in policies {
            p.validate()?;
        }
        let dual_speed = match &cfg.dual_speed {
            Some(ds) => {
                let mut ds = ds.clone();
                ds.prepare()?;
                Some(ds)
            }
            None => None,
        };
        let max_price = cfg
            .price_levels()
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        Ok(Self {
            cfg,
            networks: cfg.build_networks(),
            profiles: (0..cfg.general.duts)
                .map(|d| cfg.demand_for(d).profiles())
                .collect(),
            price_levels: cfg.price_levels(),
            dual_speed,
            names: policy_names(policies),
            funding: Tokens::from_cents(tokens(max_price).cents() * cfg.general.steps as i64),
        })
    }

    fn replay(
        &self,
        trace: &ScenarioTrace,
        policy_index: usize,
        spec: &PolicySpec,
        keep_steps: bool,
    ) -> Result<PolicyRun> {
        let cfg = self.cfg;
        let duts = cfg.general.duts;
        let k = self.networks.len();
        let it = trace.iteration as u64;
        let mut agents = self
            .profiles
            .iter()
            .map(|apps| Agent::new(spec, apps, k, &self.price_levels))
            .collect::<Result<Vec<_>>>()?;
        let mut rngs: Vec<_> = (0..duts)
            .map(|d| {
                stream(
                    trace.seed,
                    purpose::POLICY + (policy_index as u64) * 0x100 + d as u64,
                    it,
                )
            })
            .collect();
        let mut histories: Vec<HashMap<(usize, usize), DecileHistory>> = vec![HashMap::new(); duts];

        let providers: Vec<String> = (0..k).map(|a| account("network", a)).collect();
        let devices: Vec<String> = (0..duts).map(|d| account("dut", d)).collect();
        let mut ledger = Ledger::new([EXCHANGE]);
        for dev in &devices {
            ledger.execute(TxPayload::deposit(dev, EXCHANGE, self.funding))?;
        }

        let mut price_states = trace.initial_price_states.clone();
        let mut welfare = 0.0;
        let mut discounted = 0.0;
        let mut discount = 1.0;
        let mut selections = vec![0u64; k];
        let mut records = Vec::new();
        let learns = spec.learns();

        for step in 0..cfg.general.steps {
            let prices: Vec<f64> = match &self.dual_speed {
                Some(ds) => price_states.iter().map(|s| ds.price(*s)).collect(),
                None => trace.prices[step].clone(),
            };
            for (a, name) in providers.iter().enumerate() {
                ledger.execute(TxPayload::offer(name, tokens(prices[a]), duts as u32))?;
            }

            let mut choice = Vec::with_capacity(duts);
            for d in 0..duts {
                let sinr: Vec<f64> = trace.links[step][d].iter().map(|l| l.sinr).collect();
                let obs = Observation {
                    app: trace.apps[d][step],
                    prices: &prices,
                    sinr: &sinr,
                };
                let explore = learns && step < cfg.general.training_steps + d;
                choice.push(agents[d].decide(&obs, explore, &mut rngs[d]).0);
            }

            let mut load: HashMap<(usize, usize), u32> = HashMap::new();
            for (d, &a) in choice.iter().enumerate() {
                *load
                    .entry((a, trace.links[step][d][a].serving_bs))
                    .or_default() += 1;
            }

            let mut step_counts = vec![0u32; k];
            for (d, &a) in choice.iter().enumerate() {
                step_counts[a] += 1;
                selections[a] += 1;
                let link = &trace.links[step][d][a];
                let epoch = ledger.record(&providers[a]).map_or(0, |r| r.epoch);
                let bought = ledger
                    .execute(TxPayload::allocate(
                        &providers[a],
                        &devices[d],
                        epoch,
                        tokens(prices[a]),
                    ))?
                    .is_accepted();
                let throughput = if bought {
                    let sharing = trace.attached[a][link.serving_bs] + load[&(a, link.serving_bs)];
                    let net = &self.networks[a];
                    max_throughput(
                        link.sinr,
                        net.bandwidth_hz,
                        sharing,
                        cfg.radio.efficiency_cap,
                    )
                } else {
                    log::warn!("allocation by {} on {} rejected", devices[d], providers[a]);
                    0.0
                };
                let app = trace.apps[d][step];
                let utility = self.profiles[d][app.0].utility(throughput, prices[a]);
                let signal = match cfg.general.reward {
                    RewardMode::Utility => utility,
                    RewardMode::Decile => {
                        let h = histories[d].entry((app.0, a)).or_default();
                        let r = h.rank(utility).map(f64::from).unwrap_or(utility);
                        h.push(utility);
                        r
                    }
                };
                agents[d].observe(&Feedback {
                    provider: ProviderId(a),
                    app,
                    throughput_mbps: throughput,
                    price: prices[a],
                    reward: signal,
                });
                welfare += utility;
                discounted += discount * utility;
                if keep_steps {
                    records.push(StepRecord {
                        iter: trace.iteration,
                        step,
                        dut: d,
                        policy: self.names[policy_index].clone(),
                        provider: ProviderId(a),
                        app,
                        price: prices[a],
                        throughput_mbps: throughput,
                        reward: utility,
                    });
                }
            }
            discount *= cfg.general.discount;

            if let Some(ds) = &self.dual_speed {
                price_states = price_states
                    .iter()
                    .enumerate()
                    .map(|(a, &s)| ds.step_with(s, step_counts[a], trace.price_uniforms[step][a]))
                    .collect();
            }
        }
        Ok(PolicyRun {
            welfare,
            discounted,
            selections,
            records,
        })
    }
}

/// Runs every policy on the same seeded trace, iteration by iteration.
///
/// Iterations are independent and may run in parallel; results are
/// identical for any thread count.
pub fn run_scenario(
    cfg: &RunConfig,
    policies: &[PolicySpec],
    opts: &RunOptions,
) -> Result<RunResult> {
    if policies.is_empty() {
        return Err(Error::InvalidInput("no policies to run".into()));
    }
    let setup = Setup::new(cfg, policies)?;
    let iterations = opts.iterations.unwrap_or(cfg.general.iterations);
    if iterations == 0 {
        return Err(Error::InvalidInput(
            "at least one iteration is required".into(),
        ));
    }
    let one = |it: usize| -> Result<Vec<PolicyRun>> {
        let trace = ScenarioTrace::generate(cfg, &setup.networks, opts.seed, it)?;
        policies
            .iter()
            .enumerate()
            .map(|(p, spec)| setup.replay(&trace, p, spec, opts.keep_steps))
            .collect()
    };
    let per_iter: Vec<Vec<PolicyRun>> = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            pool.install(|| {
                (0..iterations)
                    .into_par_iter()
                    .map(one)
                    .collect::<Result<_>>()
            })?
        }
        None => (0..iterations)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?,
    };

    let n = policies.len();
    let k = setup.networks.len();
    let mut result = RunResult {
        seed: opts.seed,
        iterations,
        policies: setup.names.clone(),
        welfare: vec![Vec::with_capacity(iterations); n],
        discounted_return: vec![Vec::with_capacity(iterations); n],
        selections: vec![vec![0; k]; n],
        records: Vec::new(),
    };
    for runs in per_iter {
        for (p, run) in runs.into_iter().enumerate() {
            result.welfare[p].push(run.welfare);
            result.discounted_return[p].push(run.discounted);
            for (a, c) in run.selections.iter().enumerate() {
                result.selections[p][a] += c;
            }
            result.records.extend(run.records);
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub mean_welfare: f64,
}

/// `reference` against one other policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub policy: String,
    pub baseline: String,
    pub mean_welfare: f64,
    pub baseline_mean_welfare: f64,
    /// Relative improvement of `policy` over `baseline`; absent when the
    /// baseline welfare is zero.
    pub improvement: Option<f64>,
    pub t: Option<f64>,
    pub p_adjusted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub iterations: usize,
    pub policies: Vec<PolicySummary>,
    pub comparisons: Vec<Comparison>,
}

/// Compares `policy` against `baseline` with `comparisons`-fold Bonferroni
/// adjustment.
pub fn compare(
    run: &RunResult,
    policy: usize,
    baseline: usize,
    comparisons: usize,
) -> Result<Comparison> {
    let (a, b) = (&run.welfare[policy], &run.welfare[baseline]);
    let (ma, mb) = (mean(a), mean(b));
    let test = if a.len() >= 4 {
        Some(welfare_t_test(a, b, comparisons)?)
    } else {
        None
    };
    Ok(Comparison {
        policy: run.policies[policy].clone(),
        baseline: run.policies[baseline].clone(),
        mean_welfare: ma,
        baseline_mean_welfare: mb,
        improvement: improvement(ma, mb).ok(),
        t: test.map(|t| t.t),
        p_adjusted: test.map(|t| t.p_adjusted),
    })
}

impl Summary {
    /// Compares `reference` (ExpectedUtility when present, else the first
    /// policy) against every other policy.
    pub fn from_run(run: &RunResult) -> Result<Self> {
        let reference = run
            .policies
            .iter()
            .position(|p| p == "ExpectedUtility")
            .unwrap_or(0);
        let others: Vec<usize> = (0..run.policies.len())
            .filter(|p| *p != reference)
            .collect();
        let comparisons = others
            .iter()
            .map(|&b| compare(run, reference, b, others.len()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            seed: run.seed,
            iterations: run.iterations,
            policies: (0..run.policies.len())
                .map(|p| PolicySummary {
                    policy: run.policies[p].clone(),
                    mean_welfare: run.mean_welfare(p),
                })
                .collect(),
            comparisons,
        })
    }

    pub fn comparison(&self, baseline: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.baseline == baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub run: RunResult,
    /// One row per non-baseline estimator, against unlimited history.
    pub rows: Vec<Comparison>,
}

/// Runs ExpectedUtility once per estimator and compares each against the
/// unlimited-history estimator.
pub fn tune_history(
    cfg: &RunConfig,
    estimators: &[EstimatorMode],
    opts: &RunOptions,
) -> Result<TuningResult> {
    let mut specs = vec![PolicySpec::ExpectedUtility {
        estimator: EstimatorMode::FullMean,
        epsilon: 0.0,
    }];
    for e in estimators {
        e.validate()?;
        if *e != EstimatorMode::FullMean {
            specs.push(PolicySpec::ExpectedUtility {
                estimator: *e,
                epsilon: 0.0,
            });
        }
    }
    let run = run_scenario(cfg, &specs, opts)?;
    let m = specs.len() - 1;
    let rows = (1..specs.len())
        .map(|p| compare(&run, p, 0, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(TuningResult { run, rows })
}
