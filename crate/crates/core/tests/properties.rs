mod common;

use bertrand::game::{
    du_utility_exact, du_utility_quadratic, interior_price_grid, maclaurin_remainder_bound,
    pricing_gradient, stationary_price, utility_report, verify_concavity, Game,
};
use bertrand::harness::oracle::{is_unimodal, price_profile};
use bertrand::selection::feasibility_report;
use bertrand::solver::{best_response_map, InitialPrices, LearningRates};
use bertrand::{
    select_sus, solve_cig, solve_icig, Scenario, SolverConfig, StrategyProfile, SuBaseline,
};
use proptest::prelude::*;

fn scenario(sus: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Scenario> {
    (any::<u64>(), sus).prop_map(|(seed, n)| {
        let mut rng = common::rng(seed);
        common::random_scenario(&mut rng, n)
    })
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn tight() -> SolverConfig {
    SolverConfig::cig().with_epsilon(1e-12)
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn useful_prices_give_interior_demand(s in scenario(1..=4), q in 0.0..1.0f64) {
        let game = Game::new(&s, s.all_sus()).unwrap();
        let coeffs = game.coefficients(&vec![q; s.sus.len()]).unwrap();
        for c in &coeffs.su {
            for p in interior_price_grid(c, 20) {
                let l = c.alpha - c.beta * p;
                prop_assert!(l > 0.0 && l < c.cap, "price {p} gives {l} outside (0, {})", c.cap);
            }
        }
    }

    #[test]
    fn stationary_price_zeroes_the_gradient(s in scenario(1..=4), q in 0.0..1.0f64) {
        let game = Game::new(&s, s.all_sus()).unwrap();
        let coeffs = game.coefficients(&vec![q; s.sus.len()]).unwrap();
        for c in &coeffs.su {
            let mu = stationary_price(c).unwrap();
            let g = pricing_gradient(c, mu);
            prop_assert!(g.abs() <= 1e-9 * c.alpha.abs().max(1.0), "gradient {g} at {mu}");
        }
    }

    #[test]
    fn curvature_is_negative_everywhere(s in scenario(1..=4), q in 0.0..1.0f64) {
        let game = Game::new(&s, s.all_sus()).unwrap();
        let coeffs = game.coefficients(&vec![q; s.sus.len()]).unwrap();
        for (slot, c) in coeffs.su.iter().enumerate() {
            let r = verify_concavity(&coeffs, slot, &interior_price_grid(c, 25)).unwrap();
            prop_assert!(r.concave);
            prop_assert!(r.max_relative_mismatch < 1e-6);
        }
    }

    #[test]
    fn pricing_objective_is_unimodal(s in scenario(1..=3), q in 0.0..1.0f64) {
        let prices = vec![q; s.sus.len()];
        for slot in 0..s.sus.len() {
            let profile = price_profile(&s, &s.all_sus(), slot, &prices, 1e-3).unwrap();
            let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
            prop_assert!(is_unimodal(&values));
        }
    }

    #[test]
    fn zero_trade_is_neutral(s in scenario(1..=4), q in 0.0..1.0f64) {
        let n = s.sus.len();
        let profile = StrategyProfile::new(vec![0.0; n], vec![q; n]);
        let report = utility_report(&profile, &s, &s.all_sus()).unwrap();
        prop_assert_eq!(s.system.su_baseline, SuBaseline::OwnWorkload);
        prop_assert!(report.u_du.abs() <= 1e-15, "U0 = {}", report.u_du);
        prop_assert!(report.u_su.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn icig_never_sets_negative_prices(
        s in scenario(1..=4),
        rate in 0.0..5.0f64,
        start in prop::collection::vec(0.0..2.0f64, 4),
    ) {
        let n = s.sus.len();
        let config = SolverConfig {
            learning_rates: LearningRates::Uniform(rate),
            initial_prices: InitialPrices::Fixed(start[..n].to_vec()),
            max_iterations: 60,
            ..SolverConfig::icig()
        };
        let r = solve_icig(&s, &s.all_sus(), &config).unwrap();
        for rec in std::iter::once(&r.initial).chain(&r.trajectory) {
            prop_assert!(rec.prices.iter().all(|&q| q >= 0.0), "{:?}", rec.prices);
        }
    }

    #[test]
    fn cig_stops_at_a_fixed_point(s in scenario(1..=4)) {
        let r = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        prop_assume!(r.converged);
        let game = Game::new(&s, s.all_sus()).unwrap();
        let next = best_response_map(&game, r.prices()).unwrap();
        for (a, b) in next.iter().zip(r.prices()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn cig_steps_shrink_near_the_equilibrium(s in scenario(2..=2)) {
        let r = solve_cig(&s, &s.all_sus(), &SolverConfig::cig().with_epsilon(1e-10)).unwrap();
        prop_assert!(r.converged);
        let records: Vec<&Vec<f64>> = std::iter::once(&r.initial)
            .chain(&r.trajectory)
            .map(|rec| &rec.prices)
            .collect();
        let steps: Vec<f64> = records
            .windows(2)
            .map(|w| w[0].iter().zip(w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        let tail = &steps[steps.len().saturating_sub(5)..];
        for w in tail.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15, "steps {steps:?}");
        }
    }

    #[test]
    fn both_solvers_agree(s in scenario(2..=4)) {
        let cig = solve_cig(&s, &s.all_sus(), &SolverConfig::cig().with_epsilon(1e-4)).unwrap();
        let icig = solve_icig(&s, &s.all_sus(), &SolverConfig::icig().with_epsilon(1e-4)).unwrap();
        prop_assume!(cig.converged && icig.converged);
        let pairs = cig.prices().iter().zip(icig.prices());
        for (a, b) in pairs.chain(cig.alloc().iter().zip(icig.alloc())) {
            prop_assert!((a - b).abs() <= 1e-2 * a.abs(), "cig {a} icig {b}");
        }
    }

    #[test]
    fn solving_is_deterministic(s in scenario(1..=4)) {
        let a = solve_icig(&s, &s.all_sus(), &SolverConfig::icig()).unwrap();
        let b = solve_icig(&s, &s.all_sus(), &SolverConfig::icig()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn quadratic_utility_stays_within_the_remainder(
        s in scenario(1..=4),
        fractions in prop::collection::vec(0.0..=1.0f64, 4),
        q in 0.0..0.5f64,
    ) {
        let active = s.all_sus();
        let n = active.len();
        let coeffs = Game::new(&s, active.clone()).unwrap().coefficients(&vec![q; n]).unwrap();
        let alloc: Vec<f64> = coeffs
            .su
            .iter()
            .zip(&fractions)
            .map(|(c, f)| f * c.power_cap.min(0.05))
            .collect();
        let profile = StrategyProfile::new(alloc.clone(), vec![q; n]);
        let exact = du_utility_exact(&profile, &s, &active).unwrap();
        let quad = du_utility_quadratic(&profile, &coeffs).unwrap();
        let bound = maclaurin_remainder_bound(&coeffs, &alloc);
        prop_assert!((exact - quad).abs() <= bound, "gap {} bound {bound}", (exact - quad).abs());
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn selection_shrinks_and_ends_feasible(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::oversubscribed_scenario(&mut rng);
        let candidates = s.all_sus();
        let out = select_sus(&s, &candidates, &SolverConfig::cig()).unwrap();
        prop_assert!(out.rounds.len() <= candidates.len());
        for pair in out.rounds.windows(2) {
            let (before, after) = (&pair[0].candidates, &pair[1].candidates);
            prop_assert!(after.len() < before.len());
            prop_assert!(after.iter().all(|i| before.contains(i)));
        }
        if out.final_equilibrium.is_some() {
            let audit = feasibility_report(&out, &s).unwrap();
            prop_assert!(audit.all_satisfied(), "{:?}", audit.violations().collect::<Vec<_>>());
        } else {
            prop_assert!(out.active_set.is_empty());
        }
    }

    #[test]
    fn selection_is_idempotent(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = common::oversubscribed_scenario(&mut rng);
        let out = select_sus(&s, &s.all_sus(), &tight()).unwrap();
        prop_assume!(!out.active_set.is_empty());
        let again = select_sus(&s, &out.active_set, &tight()).unwrap();
        prop_assert_eq!(again.removals().count(), 0);
        prop_assert_eq!(&again.active_set, &out.active_set);
        let first = out.final_equilibrium.unwrap();
        let second = again.final_equilibrium.unwrap();
        for (a, b) in first.prices().iter().zip(second.prices()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }
}
