use spruce::config::PolicyChoice;
use spruce::diagnostics::*;
use spruce::harness::Simulator;
use spruce::presets;
use spruce::spruce_core::StatisticKind;

#[test]
fn suboptimal_pulls_with_unit_zeta() {
    let mut c = presets::easy();
    c.zeta = 1.0;
    c.statistic = StatisticKind::Co96;
    let oracle = solve_oracle(&c).unwrap();
    let reports = suboptimal_pulls_check(&Simulator::new(c).unwrap(), &oracle, &[1000, 10_000], 40, 0.95).unwrap();
    for r in &reports {
        assert!(r.passed, "{r}");
    }
    assert_eq!(reports.len(), 6);
}

#[test]
fn always_pulling_a_null_arm_fails_the_pull_check() {
    // Mutation sanity: a rule that ignores the wealth violates the
    // decreasing-share requirement for the arm it favours.
    let mut c = presets::easy();
    c.statistic = StatisticKind::Co96;
    c.policy = PolicyChoice::Oracle(1);
    let oracle = solve_oracle(&c).unwrap();
    let reports = suboptimal_pulls_check(&Simulator::new(c).unwrap(), &oracle, &[1000, 10_000], 10, 0.95).unwrap();
    let share = reports.iter().find(|r| r.name.starts_with("N_2(10000)")).unwrap();
    assert!(!share.passed);
    assert_eq!(share.measured, 0.0);
}

#[test]
fn zero_gap_arms_are_skipped() {
    let mut c = presets::easy();
    c.arms = vec![spruce::distribution::ArmDistribution::Bernoulli(0.7); 2];
    c.statistic = StatisticKind::Co96;
    let oracle = solve_oracle(&c).unwrap();
    let reports = suboptimal_pulls_check(&Simulator::new(c).unwrap(), &oracle, &[100], 2, 0.95).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(reports[0].note.contains("skipped"));
}

#[test]
fn single_alpha_sweep_and_censoring() {
    let mut c = presets::easy();
    c.statistic = StatisticKind::Co96;
    c.max_horizon = 50;
    let oracle = solve_oracle(&c).unwrap();
    let sim = Simulator::new(c).unwrap();
    let report = stopping_ratio_sweep(&sim, &oracle, &[1e-3], 20, None).unwrap();
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    // log(1000)/ℓ* ≈ 84 > 50, so every run is censored.
    assert_eq!(row.censored_frac, 1.0);
    assert!(row.lower_estimate());
    assert_eq!(row.mean_tau, 50.0);
    assert!(report.checks[0].note.contains("lower estimate"));
    assert!(stopping_ratio_sweep(&sim, &oracle, &[1.0], 2, None).is_err());
}

#[test]
fn sweep_rows_agree_with_single_level_runs() {
    let mut c = presets::easy();
    c.statistic = StatisticKind::Co96;
    let oracle = solve_oracle(&c).unwrap();
    let sim = Simulator::new(c.clone()).unwrap();
    let report = stopping_ratio_sweep(&sim, &oracle, &[1e-4, 1e-2], 30, None).unwrap();
    assert_eq!(report.rows[0].alpha, 1e-2);
    for row in &report.rows {
        c.alpha = row.alpha;
        let single = Simulator::new(c.clone()).unwrap();
        let mean = (0..30)
            .map(|r| single.run_until_rejection(r, c.max_horizon).unwrap().time() as f64)
            .sum::<f64>()
            / 30.0;
        assert_eq!(mean, row.mean_tau);
    }
}

#[test]
fn checks_are_reproducible() {
    let c = presets::easy();
    let oracle = solve_oracle(&c).unwrap();
    let a = mgf_check(&c, 0, &oracle, &[1.0], 10_000, 1e-2).unwrap();
    let b = mgf_check(&c, 0, &oracle, &[1.0], 10_000, 1e-2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rct_trace_diagnostics() {
    let mut c = presets::rct();
    c.horizon = 4000;
    let sim = Simulator::new(c.clone()).unwrap();
    let trace = sim.run_rct_episode(0).unwrap();
    assert!(unit_portfolio_check(&sim, &trace).unwrap().passed);
    let ht = horvitz_thompson_estimates(&c, &trace).unwrap();
    assert_eq!(ht.len(), 4000);
    assert!(ht.iter().all(|v| [-2.0, 0.0, 2.0].contains(v)));
    assert!(horvitz_thompson_estimates(&presets::easy(), &trace).is_err());
    assert!(ht_unbiasedness_check(&c, 0, 20_000).unwrap().passed);
}

#[test]
fn ordering_and_regret_on_a_preset_trace() {
    let mut c = presets::hard();
    c.horizon = 300;
    let sim = Simulator::new(c.clone()).unwrap();
    let trace = sim.run_episode(0).unwrap();
    assert!(evalue_ordering_check(&sim, &trace).unwrap().passed);
    c.statistic = StatisticKind::Co96;
    let co = Simulator::new(c).unwrap();
    for arm in 0..5 {
        assert!(portfolio_regret_check(&sim, &trace, arm).unwrap().passed);
        assert!(portfolio_regret_check(&co, &trace, arm).unwrap().passed);
    }
}
