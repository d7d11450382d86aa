use proptest::prelude::*;
use spruce_core::models::{
    ate_evector, horvitz_thompson, one_sided_evector, transformed_estimate, tuple_equality_evector, two_sided_evector,
};
use spruce_core::*;

fn grid_value(evs: &[EVector], lambda1: f64) -> f64 {
    evs.iter()
        .map(|e| ((1.0 - lambda1) * e.values()[0] + lambda1 * e.values()[1]).ln())
        .sum()
}

fn arb_evector() -> impl Strategy<Value = EVector> {
    (0.0f64..3.0, 0.0f64..3.0)
        .prop_filter("not all zero", |(a, b)| *a > 0.0 || *b > 0.0)
        .prop_map(|(a, b)| EVector::pair(a, b).unwrap())
}

#[derive(Debug, Clone)]
enum ModelDraw {
    OneSided { y: f64, mu0: f64 },
    TwoSided { y: f64, mu0: f64 },
    Tuple { x: f64, y: f64 },
    Ate { y: f64, treated: bool, pi: f64, delta: f64 },
}

impl ModelDraw {
    fn problem(&self) -> TestingProblem {
        match *self {
            ModelDraw::OneSided { mu0, .. } => TestingProblem::one_sided(mu0).unwrap(),
            ModelDraw::TwoSided { mu0, .. } => TestingProblem::two_sided(mu0).unwrap(),
            ModelDraw::Tuple { .. } => TestingProblem::tuple_equality(),
            ModelDraw::Ate { pi, delta, .. } => TestingProblem::ate(pi, delta).unwrap(),
        }
    }

    fn evector(&self) -> EVector {
        match *self {
            ModelDraw::OneSided { y, mu0 } => one_sided_evector(y, mu0).unwrap(),
            ModelDraw::TwoSided { y, mu0 } => two_sided_evector(y, mu0).unwrap(),
            ModelDraw::Tuple { x, y } => tuple_equality_evector(x, y).unwrap(),
            ModelDraw::Ate { y, treated, pi, delta } => ate_evector(y, treated, pi, delta).unwrap(),
        }
    }
}

fn arb_model_draw() -> impl Strategy<Value = ModelDraw> {
    prop_oneof![
        (0.0f64..=1.0, 0.01f64..0.99).prop_map(|(y, mu0)| ModelDraw::OneSided { y, mu0 }),
        (0.0f64..=1.0, 0.01f64..0.99).prop_map(|(y, mu0)| ModelDraw::TwoSided { y, mu0 }),
        (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, y)| ModelDraw::Tuple { x, y }),
        (0.0f64..=1.0, any::<bool>(), 0.05f64..0.95, -0.9f64..0.9).prop_map(|(y, treated, pi, delta)| ModelDraw::Ate {
            y,
            treated,
            pi,
            delta
        }),
    ]
}

/// Bernoulli-style streams for one problem: a fixed `μ₀` and a list of `y`s.
fn arb_one_sided_stream(max_len: usize) -> impl Strategy<Value = Vec<EVector>> {
    (0.1f64..0.9, proptest::collection::vec(0.0f64..=1.0, 1..=max_len))
        .prop_map(|(mu0, ys)| ys.into_iter().map(|y| one_sided_evector(y, mu0).unwrap()).collect())
}

fn arb_two_sided_stream(max_len: usize) -> impl Strategy<Value = Vec<EVector>> {
    (0.1f64..0.9, proptest::collection::vec(0.0f64..=1.0, 1..=max_len))
        .prop_map(|(mu0, ys)| ys.into_iter().map(|y| two_sided_evector(y, mu0).unwrap()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bih_dominates_uniform_grid(evs in proptest::collection::vec(arb_evector(), 1..=200)) {
        let opt = best_in_hindsight(&evs, 1e-9).unwrap();
        let grid = (0..=1000).map(|i| grid_value(&evs, i as f64 / 1000.0)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(grid <= opt.value + 1e-9, "grid {} > bih {}", grid, opt.value);
        let at_optimum = grid_value(&evs, opt.portfolio.weights()[1]);
        prop_assert!((at_optimum - opt.value).abs() <= 1e-9 * (1.0 + opt.value.abs()));
    }

    #[test]
    fn warm_start_reaches_the_same_optimum(
        evs in proptest::collection::vec(arb_evector(), 1..=50),
        start in 0.0f64..=1.0,
    ) {
        let atoms: Vec<Atom> = evs.iter().map(|e| Atom::new(e.clone(), 1.0)).collect();
        let cold = maximize_log_wealth(&atoms, 1e-9, None).unwrap();
        let warm = maximize_log_wealth(&atoms, 1e-9, Some(&Portfolio::binary(start).unwrap())).unwrap();
        prop_assert!((cold.value - warm.value).abs() <= 1e-9 * (1.0 + cold.value.abs()));
    }

    #[test]
    fn up_regret_within_cover_bound(evs in prop_oneof![arb_one_sided_stream(500), arb_two_sided_stream(500)]) {
        let mixture = UpMixture::standard();
        let mut wealth = mixture.fresh_wealth();
        let mut up = 0.0;
        for e in &evs {
            up += log_increment(&mixture.portfolio(&wealth), e).unwrap();
            mixture.accumulate(&mut wealth, e).unwrap();
        }
        let bih = best_in_hindsight(&evs, 1e-9).unwrap().value;
        let regret = bih - up;
        prop_assert!(regret <= co96_regret(evs.len() as u64, 1) + 1e-6, "regret {}", regret);
        prop_assert!(regret >= -1e-6, "regret {}", regret);
    }

    #[test]
    fn unit_portfolio_identity(draw in arb_model_draw()) {
        let constants = draw.problem().constants().unwrap();
        let inc = log_increment(constants.lambda_tilde(), &draw.evector()).unwrap();
        match draw {
            // λ̃ = (1, 0) reads the constant first component.
            ModelDraw::OneSided { .. } | ModelDraw::Ate { .. } => prop_assert_eq!(inc, 0.0),
            // A two-term convex combination is within a few ulps of one.
            _ => prop_assert!(inc.abs() <= 1e-15, "increment {}", inc),
        }
    }

    #[test]
    fn evectors_bounded_by_b(draw in arb_model_draw()) {
        let b = draw.problem().constants().unwrap().b();
        prop_assert!(draw.evector().max_component() <= b + 1e-12);
    }

    #[test]
    fn horvitz_thompson_range(y in 0.0f64..=1.0, treated in any::<bool>(), pi in 0.001f64..0.999) {
        let psi = horvitz_thompson(y, treated, pi);
        prop_assert!(psi >= -1.0 / (1.0 - pi) && psi <= 1.0 / pi);
        let t = transformed_estimate(y, treated, pi);
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn co96_regret_monotone(n in 0u64..1_000_000, d in 1usize..10) {
        prop_assert!(co96_regret(n, d) >= 0.0);
        prop_assert!(co96_regret(n + 1, d) >= co96_regret(n, d));
        prop_assert!(co96_regret(n, d + 1) >= co96_regret(n, d));
    }
}

/// Random multi-armed traces: `(arm, y)` pairs under a one-sided problem.
fn arb_trace() -> impl Strategy<Value = (usize, f64, Vec<(usize, f64)>)> {
    (1usize..=4, 0.1f64..0.9).prop_flat_map(|(k, mu0)| {
        let steps = proptest::collection::vec((0..k, prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]), 1..=300);
        (Just(k), Just(mu0), steps)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn co96_never_exceeds_up((k, mu0, steps) in arb_trace()) {
        let problem = TestingProblem::one_sided(mu0).unwrap();
        let mut state = WealthState::new(k, problem.constants().unwrap(), StatisticKind::Up).unwrap();
        for (arm, y) in steps {
            state.update(arm, &problem.evector(Observation::Scalar(y)).unwrap()).unwrap();
            let co96 = state.log_evalue_of(StatisticKind::Co96).unwrap();
            let up = state.log_evalue_of(StatisticKind::Up).unwrap();
            prop_assert!(co96 <= up + 1e-6, "round {}: {} > {}", state.round(), co96, up);
            for (a, ledger) in state.ledgers().iter().enumerate() {
                if ledger.pull_count() > 0 {
                    let expected = ledger.bih_value() - co96_regret(ledger.pull_count(), 1);
                    prop_assert_eq!(ledger.co96_log_wealth(1).to_bits(), expected.to_bits(), "arm {}", a);
                }
            }
        }
        let pulls: u64 = state.ledgers().iter().map(|l| l.pull_count()).sum();
        prop_assert_eq!(pulls, state.round());
    }

    #[test]
    fn updates_are_deterministic((k, mu0, steps) in arb_trace()) {
        let problem = TestingProblem::one_sided(mu0).unwrap();
        let constants = problem.constants().unwrap();
        let run = || {
            let mut state = WealthState::new(k, constants.clone(), StatisticKind::Co96).unwrap();
            for (arm, y) in &steps {
                state.update(*arm, &problem.evector(Observation::Scalar(*y)).unwrap()).unwrap();
            }
            state
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.log_evalue().to_bits(), b.log_evalue().to_bits());
        prop_assert!(a == b);
    }

    #[test]
    fn spruce_sweeps_then_stays_deterministic((k, mu0, steps) in arb_trace()) {
        let problem = TestingProblem::one_sided(mu0).unwrap();
        let constants = problem.constants().unwrap();
        let params = UcbParams::new(3.0, 1.0, constants.b()).unwrap();
        let run = || {
            let mut state = WealthState::new(k, constants.clone(), StatisticKind::Co96).unwrap();
            let mut arms = Vec::new();
            for (n, (_, y)) in (1u64..).zip(&steps) {
                let arm = spruce_select(&state, n, &params).unwrap();
                arms.push(arm);
                state.update(arm, &problem.evector(Observation::Scalar(*y)).unwrap()).unwrap();
                if n == k as u64 {
                    assert!(state.ledgers().iter().all(|l| l.pull_count() == 1));
                }
            }
            arms
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn lcb_below_ucb((_k, mu0, steps) in arb_trace(), n_extra in 0u64..10_000) {
        let problem = TestingProblem::one_sided(mu0).unwrap();
        let constants = problem.constants().unwrap();
        let params = UcbParams::new(3.0, 1.0, constants.b()).unwrap();
        let mut state = WealthState::new(1, constants.clone(), StatisticKind::Co96).unwrap();
        for (_, y) in &steps {
            state.update(0, &problem.evector(Observation::Scalar(*y)).unwrap()).unwrap();
        }
        let ledger = state.ledger(0).unwrap();
        let n = state.round() + 1 + n_extra;
        let ucb = ucb_score(ledger, n, &params, 1).unwrap();
        let lcb = lcb_score(ledger, n, &params, 1).unwrap();
        let mean = ledger.bih_value() / ledger.pull_count() as f64;
        prop_assert!(lcb <= mean && mean <= ucb);
    }
}
