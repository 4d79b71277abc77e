use bandsim::harness::{testbed_mode, theoretical_success, training_sweep, TestbedConfig};
use bandsim::types::ProviderId;

#[test]
fn exhaustive_optimum_of_the_training_table() {
    let cfg = TestbedConfig::training_experiment();
    let mut best = (f64::NEG_INFINITY, vec![]);
    for a in 0..2 {
        for b in 0..2 {
            let v = cfg.aggregate_utility(&[a, b]).unwrap();
            if v > best.0 {
                best = (v, vec![a, b]);
            }
        }
    }
    assert_eq!(best.1, vec![1, 0]);
    assert!((best.0 - 2.5).abs() < 1e-12);
    let optimal = cfg.optimal().unwrap();
    assert_eq!(optimal.assignment, vec![ProviderId(1), ProviderId(0)]);
    assert_eq!(optimal.value, best.0);
}

#[test]
fn testbed_runs_are_reproducible() {
    let mut cfg = TestbedConfig::training_experiment();
    cfg.repetitions = 40;
    assert_eq!(
        testbed_mode(&cfg, 5).unwrap(),
        testbed_mode(&cfg, 5).unwrap()
    );
}

/// Characterizes two-step training rather than gating it: the learners land
/// between a coin flip per UE (0.25) and the sampling bound plus slack.
#[test]
fn two_step_training_characterization() {
    let cfg = TestbedConfig::training_experiment();
    let row = &training_sweep(&cfg, &[2], 1000, 42).unwrap()[0];
    assert_eq!(row.theoretical, theoretical_success(2.0));
    assert!(
        row.success_rate > 0.25 && row.success_rate < row.theoretical + 0.15,
        "{row:?}"
    );
}

#[test]
fn long_training_converges_on_the_optimum() {
    let mut cfg = TestbedConfig::training_experiment();
    cfg.training_steps = 40;
    cfg.repetitions = 200;
    let result = testbed_mode(&cfg, 9).unwrap();
    assert!(result.success_rate > 0.97, "{}", result.success_rate);
    assert!(result.utility_fraction[result.measured_step] > 0.97);
}
