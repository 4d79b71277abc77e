//! Utility and reward functions.
//!
//! Simulation runs score a step directly with the batch/interactive utility
//! of the delivered throughput at the paid price. The QoE-decile rewards
//! ([`plan_reward`], [`prepaid_reward`], [`budget_reward`]) take a decile
//! rank from [`crate::decile_rank`] as their QoE input.

use serde::{Deserialize, Serialize};

/// Reward an interactive app gets when its threshold is missed.
pub const DEFAULT_INTERACTIVE_FLOOR: f64 = 0.01;

/// Default multiplier applied to the near-term budget limit.
pub const DEFAULT_EXTENSION_FACTOR: f64 = 1.1;

/// Throughput per unit price.
pub fn batch_utility(throughput_mbps: f64, price: f64) -> f64 {
    debug_assert!(price > 0.0);
    throughput_mbps.max(0.0) / price
}

/// Capped utility: `threshold / price` once the threshold is met, `floor` otherwise.
pub fn interactive_utility(
    throughput_mbps: f64,
    threshold_mbps: f64,
    price: f64,
    floor: f64,
) -> f64 {
    debug_assert!(price > 0.0 && threshold_mbps > 0.0);
    if throughput_mbps >= threshold_mbps {
        threshold_mbps / price
    } else {
        floor
    }
}

/// Value for money: QoE decile over plan price.
pub fn plan_reward(qoe_decile: u8, plan_price: f64) -> f64 {
    debug_assert!((1..=10).contains(&qoe_decile));
    debug_assert!(plan_price > 0.0);
    f64::from(qoe_decile) / plan_price
}

/// Prepaid-plan bookkeeping for one provider.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepaidPlanState {
    /// Cumulative usage as a fraction of the data cap.
    pub total_data_used: f64,
    /// Remaining plan life in steps.
    pub life_remaining: f64,
    /// Plan cost per step.
    pub plan_price: f64,
    pub beta: f64,
}

impl PrepaidPlanState {
    pub fn new(plan_price: f64, life_remaining: f64, beta: f64) -> Self {
        Self {
            total_data_used: 0.0,
            life_remaining,
            plan_price,
            beta,
        }
    }

    /// Record one step of usage. Usage saturates at the cap.
    pub fn consume(&mut self, data_used: f64) {
        self.total_data_used = (self.total_data_used + data_used.max(0.0)).min(1.0);
        self.life_remaining = (self.life_remaining - 1.0).max(f64::MIN_POSITIVE);
    }
}

/// Plan reward scaled by how much of the cap is left per remaining step.
pub fn prepaid_reward(qoe_decile: u8, plan: &PrepaidPlanState) -> f64 {
    debug_assert!(plan.life_remaining > 0.0);
    let slack = ((1.0 - plan.total_data_used).max(0.0) / plan.life_remaining).powf(plan.beta);
    plan_reward(qoe_decile, plan.plan_price) * slack
}

/// Spend-tracking state for the budget-aware reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetState {
    pub near_term_fraction_remaining: f64,
    pub long_term_fraction_remaining: f64,
    pub beta_long: f64,
    pub extension_factor: f64,
}

impl BudgetState {
    /// Fractions remaining after spending `spent_near` and `spent_long`
    /// against the given limits. The near-term limit is extended by
    /// `extension_factor`.
    pub fn from_spend(
        near_limit: f64,
        spent_near: f64,
        long_limit: f64,
        spent_long: f64,
        beta_long: f64,
        extension_factor: f64,
    ) -> Self {
        let extended = near_limit * extension_factor;
        Self {
            near_term_fraction_remaining: (extended - spent_near) / extended,
            long_term_fraction_remaining: (long_limit - spent_long) / long_limit,
            beta_long,
            extension_factor,
        }
    }
}

/// Plan reward discounted by remaining near-term and long-term budget.
///
/// A purchase that would leave either fraction negative is declined, so it
/// earns nothing.
pub fn budget_reward(qoe_decile: u8, plan_price: f64, budget: &BudgetState) -> f64 {
    debug_assert!(budget.beta_long > 1.0);
    let near = budget.near_term_fraction_remaining.max(0.0);
    let long = budget.long_term_fraction_remaining.max(0.0);
    plan_reward(qoe_decile, plan_price) * near * long.powf(budget.beta_long)
}
