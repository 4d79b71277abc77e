//! Provider-selection policies.

mod agent;
mod estimator;
mod gradient;
mod qlearning;
mod select;

pub use agent::{Agent, Feedback, Observation, PolicySpec, RlState};
pub use estimator::{ActionValueTable, EstimatorMode};
pub use gradient::{
    gradient_update, sample_index, softmax, softmax_policy, BaselineMode, PreferenceVector,
    SoftmaxInput,
};
pub use qlearning::{q_select, q_sinr_select, q_update, QTable};
pub use select::{
    argmax_random, argmin_random, epsilon_greedy, expected_utility_scores, expected_utility_select,
    history_select, lowest_price_select, random_select, ucb_scores, ucb_select,
};
