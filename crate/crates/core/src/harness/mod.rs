//! Experiment orchestration: seeded traces replayed across policies,
//! deterministic-capacity testbed runs, and welfare statistics.

pub mod output;
mod scenario;
pub mod stats;
pub mod testbed;
mod trace;

pub use scenario::{
    compare, policy_names, run_scenario, tune_history, Comparison, PolicySummary, RunOptions,
    RunResult, StepRecord, Summary, TuningResult,
};
pub use stats::{block_means, improvement, paired_t_test, welfare_t_test, TTest};
pub use testbed::{
    optimal_allocation, testbed_mode, theoretical_success, training_sweep, Allocation,
    CapacityEntry, CapacityTable, SweepRow, TestbedConfig, TestbedResult, TestbedUe,
};
pub use trace::{stream, LinkSample, ScenarioTrace};
