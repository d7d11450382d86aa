//! The allocation and the statistic read nothing but on-path observations.

use proptest::prelude::*;
use spruce::config::PolicyChoice;
use spruce::harness::Simulator;
use spruce::presets;
use spruce::spruce_core::StatisticKind;
use spruce::validate::random_trace_config;

#[test]
fn replay_without_counterfactuals_reproduces_the_run() {
    for (name, policy) in [
        ("spruce", PolicyChoice::Spruce),
        ("round_robin", PolicyChoice::RoundRobin),
        ("uniform_random", PolicyChoice::UniformRandom),
    ] {
        let mut c = presets::easy();
        c.horizon = 2000;
        c.policy = policy;
        let sim = Simulator::new(c).unwrap();
        let trace = sim.run_episode(4).unwrap();
        let stripped = trace.without_counterfactuals();
        assert!(stripped.records.iter().all(|r| r.nature.is_none()));
        let replayed = sim.replay(&stripped).unwrap();
        assert_eq!(replayed.len(), trace.records.len(), "{name}");
        for (r, (arm, log_e)) in trace.records.iter().zip(replayed) {
            assert_eq!(r.arm, arm, "{name}");
            assert_eq!(r.log_evalue.to_bits(), log_e.to_bits(), "{name}");
        }
    }
}

#[test]
fn rct_replay() {
    let mut c = presets::rct();
    c.horizon = 3000;
    let sim = Simulator::new(c).unwrap();
    let trace = sim.run_rct_episode(1).unwrap();
    let replayed = sim.replay(&trace.without_counterfactuals()).unwrap();
    assert_eq!(
        replayed.last().unwrap().1.to_bits(),
        trace.records.last().unwrap().log_evalue.to_bits()
    );
}

#[test]
fn tampered_observation_is_detected() {
    let mut c = presets::easy();
    c.horizon = 500;
    c.statistic = StatisticKind::Co96;
    let sim = Simulator::new(c).unwrap();
    let mut trace = sim.run_episode(0).unwrap();
    // Flip early arm-1 outcomes; the altered wealth redirects the allocation.
    for r in trace.records.iter_mut().take(100).filter(|r| r.arm == 0) {
        if let spruce::spruce_core::Observation::Scalar(y) = &mut r.observation {
            *y = 1.0 - *y;
        }
    }
    assert!(sim.replay(&trace).is_err());
}

#[test]
fn off_path_laws_do_not_matter_until_pulled() {
    // Changing an arm's law changes nothing before the first pull of it.
    let mut a = presets::easy();
    a.horizon = 300;
    a.statistic = StatisticKind::Co96;
    a.policy = PolicyChoice::Oracle(0);
    let mut b = a.clone();
    b.arms[2] = spruce::distribution::ArmDistribution::Bernoulli(0.9);
    let ta = Simulator::new(a).unwrap().run_episode(2).unwrap();
    let tb = Simulator::new(b).unwrap().run_episode(2).unwrap();
    for (x, y) in ta.records.iter().zip(&tb.records) {
        assert_eq!(
            (x.arm, x.observation, x.log_evalue.to_bits()),
            (y.arm, y.observation, y.log_evalue.to_bits())
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn random_traces_replay(seed in any::<u64>(), index in 0u64..1000) {
        let sim = Simulator::new(random_trace_config(seed, index, 200).unwrap()).unwrap();
        let trace = sim.run_episode(index).unwrap();
        let replayed = sim.replay(&trace.without_counterfactuals()).unwrap();
        for (r, (arm, log_e)) in trace.records.iter().zip(replayed) {
            prop_assert_eq!(r.arm, arm);
            prop_assert_eq!(r.log_evalue.to_bits(), log_e.to_bits());
        }
    }
}
