//! Shared fixtures for the benchmarks.

use bandsim::market::{Ledger, Tokens, TxPayload};
use bandsim::policies::{ActionValueTable, EstimatorMode};
use bandsim::types::ProviderId;
use bandsim::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A table with `observations` random throughput samples spread over every
/// (context, provider) cell.
pub fn filled_table(
    contexts: usize,
    providers: usize,
    mode: EstimatorMode,
    observations: usize,
) -> ActionValueTable {
    let mut r = rng(1);
    let mut table = ActionValueTable::new(contexts, providers, mode);
    for _ in 0..observations {
        let c = r.random_range(0..contexts);
        let a = ProviderId(r.random_range(0..providers));
        table.record(c, a, r.random_range(0.0..60.0));
    }
    table
}

/// The default scenario shortened to `steps` steps with `duts` devices.
pub fn scenario(steps: usize, duts: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.general.steps = steps;
    cfg.general.duts = duts;
    cfg
}

/// A ledger with funded buyers and one open offer from each of `providers`.
pub fn market(buyers: usize, providers: usize) -> Ledger {
    let mut ledger = Ledger::new(["exchange"]);
    for b in 0..buyers {
        ledger
            .execute(TxPayload::deposit(
                &format!("ue{b}"),
                "exchange",
                Tokens::from_cents(100_000_000),
            ))
            .expect("well-formed deposit");
    }
    for p in 0..providers {
        ledger
            .execute(TxPayload::offer(
                &format!("net{p}"),
                Tokens::from_cents(100),
                u32::MAX,
            ))
            .expect("well-formed offer");
    }
    ledger
}
