//! Stateless selection rules over estimate tables and contexts.
//!
//! Every rule breaks ties uniformly at random among the maximizers.

use rand::Rng;

use super::estimator::ActionValueTable;
use crate::types::{AppProfile, Context, ProviderId};

/// Uniform choice among the indices attaining the maximum score.
pub fn argmax_random<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> ProviderId {
    assert!(!scores.is_empty(), "argmax over an empty score vector");
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    let pick = if ties.len() == 1 {
        ties[0]
    } else if ties.is_empty() {
        // all NaN: fall back to a uniform choice
        rng.random_range(0..scores.len())
    } else {
        ties[rng.random_range(0..ties.len())]
    };
    ProviderId(pick)
}

pub fn argmin_random<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> ProviderId {
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    argmax_random(&negated, rng)
}

/// Scores each provider by the app's utility of its predicted throughput at
/// the provider's current price.
///
/// `throughput` is indexed by app (context) and holds raw throughput
/// observations. Providers never tried for this app score zero.
pub fn expected_utility_scores(
    throughput: &ActionValueTable,
    ctx: &Context,
    app: &AppProfile,
) -> Vec<f64> {
    (0..ctx.providers())
        .map(|a| {
            let provider = ProviderId(a);
            if throughput.count(ctx.app.0, provider) == 0 {
                0.0
            } else {
                app.utility(throughput.value(ctx.app.0, provider), ctx.prices[a])
            }
        })
        .collect()
}

pub fn expected_utility_select<R: Rng + ?Sized>(
    throughput: &ActionValueTable,
    ctx: &Context,
    app: &AppProfile,
    rng: &mut R,
) -> ProviderId {
    argmax_random(&expected_utility_scores(throughput, ctx, app), rng)
}

/// Non-contextual greedy choice over per-provider mean rewards (context 0).
pub fn history_select<R: Rng + ?Sized>(table: &ActionValueTable, rng: &mut R) -> ProviderId {
    argmax_random(&table.values(0), rng)
}

/// With probability `epsilon` a uniform provider, otherwise `base`.
pub fn epsilon_greedy<R, F>(base: F, epsilon: f64, providers: usize, rng: &mut R) -> ProviderId
where
    R: Rng + ?Sized,
    F: FnOnce(&mut R) -> ProviderId,
{
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon <= 0.0 {
        return base(rng);
    }
    if epsilon >= 1.0 || rng.random::<f64>() < epsilon {
        return random_select(providers, rng);
    }
    base(rng)
}

pub fn lowest_price_select<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> ProviderId {
    argmin_random(&ctx.prices, rng)
}

pub fn random_select<R: Rng + ?Sized>(providers: usize, rng: &mut R) -> ProviderId {
    assert!(providers > 0);
    ProviderId(rng.random_range(0..providers))
}

/// UCB scores `Q + c * sqrt(ln t / N)` for one context.
///
/// Untried arms get an infinite bonus when `c > 0`; with `c == 0` the bonus
/// vanishes everywhere and the scores are plain estimates.
pub fn ucb_scores(table: &ActionValueTable, context: usize, t: u64, c: f64) -> Vec<f64> {
    debug_assert!(t >= 1 && c >= 0.0);
    let ln_t = (t as f64).ln();
    (0..table.providers())
        .map(|a| {
            let provider = ProviderId(a);
            let q = table.value(context, provider);
            if c == 0.0 {
                return q;
            }
            match table.count(context, provider) {
                0 => f64::INFINITY,
                n => q + c * (ln_t / n as f64).sqrt(),
            }
        })
        .collect()
}

pub fn ucb_select<R: Rng + ?Sized>(
    table: &ActionValueTable,
    context: usize,
    t: u64,
    c: f64,
    rng: &mut R,
) -> ProviderId {
    argmax_random(&ucb_scores(table, context, t, c), rng)
}
