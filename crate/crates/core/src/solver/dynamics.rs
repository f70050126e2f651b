use crate::error::{Error, Result};
use crate::game::{
    cubic_pricing_value, du_best_response, pricing_gradient, su_best_response_price,
    utility_report, Game, GameCoefficients, StrategyProfile, SuCoefficients,
};
use crate::scenario::{ActiveSet, Scenario};
use crate::solver::{
    jacobian_stability, Diagnostics, EquilibriumResult, InitialPrices, IterationRecord,
    SolverConfig, SolverMode, StopReason, UpdateOrder,
};

/// Runs the solver selected by `config.mode`.
pub fn solve(
    scenario: &Scenario,
    active: &ActiveSet,
    config: &SolverConfig,
) -> Result<EquilibriumResult> {
    match config.mode {
        SolverMode::Cig => solve_cig(scenario, active, config),
        SolverMode::Icig => solve_icig(scenario, active, config),
    }
}

/// Best-response iteration with complete information.
pub fn solve_cig(
    scenario: &Scenario,
    active: &ActiveSet,
    config: &SolverConfig,
) -> Result<EquilibriumResult> {
    config.validate()?;
    let game = Game::new(scenario, active.clone())?;
    let order = config.update_order;
    iterate(
        &game,
        config,
        SolverMode::Cig,
        |coeffs, q| Ok(analytic_gradients(coeffs, q)),
        |q, _| match order {
            UpdateOrder::Jacobi => best_response_map(&game, q),
            UpdateOrder::GaussSeidel => gauss_seidel_round(&game, q),
        },
        |prev, next, _| {
            prev.iter()
                .zip(next)
                .map(|(p, n)| (n - p).abs() / p.max(1.0))
                .fold(0.0, f64::max)
        },
    )
}

/// Projected-gradient learning where each SU only observes its own sales.
pub fn solve_icig(
    scenario: &Scenario,
    active: &ActiveSet,
    config: &SolverConfig,
) -> Result<EquilibriumResult> {
    config.validate()?;
    let game = Game::new(scenario, active.clone())?;
    let rates = active
        .iter()
        .map(|index| {
            config.learning_rates.rate(index).ok_or_else(|| {
                Error::invalid(
                    "solver.learning_rates",
                    format!("no rate for candidate SU index {index}"),
                )
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let delta = config.probe_delta;
    iterate(
        &game,
        config,
        SolverMode::Icig,
        |_, q| finite_difference_gradient(&game, q, delta),
        |q, grad| {
            Ok(q.iter()
                .zip(grad)
                .zip(&rates)
                .map(|((q, g), a)| (q + a * g).max(0.0))
                .collect())
        },
        |_, next, grad| {
            next.iter()
                .zip(grad)
                .map(|(q, g)| ((q + g).max(0.0) - q).abs() / q.max(1.0))
                .fold(0.0, f64::max)
        },
    )
}

fn iterate(
    game: &Game<'_>,
    config: &SolverConfig,
    mode: SolverMode,
    gradient_at: impl Fn(&GameCoefficients, &[f64]) -> Result<Vec<f64>>,
    step: impl Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
    residual: impl Fn(&[f64], &[f64], &[f64]) -> f64,
) -> Result<EquilibriumResult> {
    let eps = config.epsilon;
    let residual_reason = match mode {
        SolverMode::Cig => StopReason::PriceChange,
        SolverMode::Icig => StopReason::GradientMapping,
    };
    let mut prices = initial_prices(game, config)?;
    let coeffs = game.coefficients(&prices)?;
    let mut grad = gradient_at(&coeffs, &prices)?;
    let initial = record(game, &coeffs, 0, &prices, &grad)?;

    let mut trajectory = Vec::new();
    let mut ratio_hit = None;
    let mut residual_hit = None;
    let mut stop_reason = StopReason::IterationLimit;
    let mut last_residual = f64::INFINITY;
    for iteration in 1..=config.max_iterations {
        let next = step(&prices, &grad)?;
        let coeffs = game.coefficients(&next)?;
        let next_grad = gradient_at(&coeffs, &next)?;
        let ratio_ok = next_grad
            .iter()
            .zip(&grad)
            .all(|(g, prev)| g.abs() <= eps * prev.abs());
        last_residual = residual(&prices, &next, &next_grad);
        let residual_ok = last_residual <= eps;
        trajectory.push(record(game, &coeffs, iteration, &next, &next_grad)?);
        prices = next;
        grad = next_grad;
        if ratio_ok && ratio_hit.is_none() {
            ratio_hit = Some(iteration);
        }
        if residual_ok && residual_hit.is_none() {
            residual_hit = Some(iteration);
        }
        if ratio_ok || residual_ok {
            stop_reason = if ratio_ok {
                StopReason::GradientRatio
            } else {
                residual_reason
            };
            break;
        }
    }

    let last = trajectory.last().unwrap_or(&initial);
    let final_profile = StrategyProfile::new(last.alloc.clone(), last.prices.clone());
    let utilities = utility_report(&final_profile, game.scenario(), game.active())?;
    let spectral_radius = if game.len() == 2 {
        Some(jacobian_stability(game.scenario(), game.active(), &prices)?.spectral_radius)
    } else {
        None
    };
    Ok(EquilibriumResult {
        mode,
        active: game.active().clone(),
        initial: initial.clone(),
        iterations_used: trajectory.len(),
        converged: stop_reason != StopReason::IterationLimit,
        stop_reason,
        diagnostics: Diagnostics {
            ratio_test_iteration: ratio_hit,
            residual_test_iteration: residual_hit,
            final_gradient_norm: grad.iter().fold(0.0, |m, g| m.max(g.abs())),
            final_residual: last_residual,
        },
        final_profile,
        utilities,
        spectral_radius,
        trajectory,
    })
}

fn record(
    game: &Game<'_>,
    coeffs: &GameCoefficients,
    iteration: usize,
    prices: &[f64],
    gradient: &[f64],
) -> Result<IterationRecord> {
    let alloc = du_best_response(coeffs, prices);
    let profile = StrategyProfile::new(alloc, prices.to_vec());
    let report = utility_report(&profile, game.scenario(), game.active())?;
    Ok(IterationRecord {
        iteration,
        prices: profile.prices,
        alloc: profile.alloc,
        u_su: report.u_su,
        u_du: report.u_du,
        gradient: gradient.to_vec(),
    })
}

/// Starting prices for `config` on `game`.
pub fn initial_prices(game: &Game<'_>, config: &SolverConfig) -> Result<Vec<f64>> {
    match &config.initial_prices {
        InitialPrices::Fixed(q) => {
            if q.len() != game.len() {
                return Err(Error::invalid(
                    "solver.initial_prices",
                    format!("expected {} prices, got {}", game.len(), q.len()),
                ));
            }
            Ok(q.clone())
        }
        InitialPrices::Midpoint => {
            let upper: Vec<f64> = game
                .upper_price_bounds()?
                .into_iter()
                .map(|q| q.max(0.0))
                .collect();
            let coeffs = game.coefficients(&upper)?;
            Ok(coeffs
                .su
                .iter()
                .map(|c| {
                    let (lo, hi) = c.price_range();
                    (0.5 * (lo + hi)).max(0.0)
                })
                .collect())
        }
    }
}

/// One simultaneous round of SU best responses.
pub fn best_response_map(game: &Game<'_>, prices: &[f64]) -> Result<Vec<f64>> {
    let coeffs = game.coefficients(prices)?;
    (0..coeffs.su.len())
        .map(|slot| Ok(su_best_response_price(&coeffs, slot)?.max(0.0)))
        .collect()
}

fn gauss_seidel_round(game: &Game<'_>, prices: &[f64]) -> Result<Vec<f64>> {
    let mut q = prices.to_vec();
    for slot in 0..q.len() {
        let coeffs = game.coefficients(&q)?;
        q[slot] = su_best_response_price(&coeffs, slot)?.max(0.0);
    }
    Ok(q)
}

/// Slope of the SU's pricing objective along its own price, with the
/// component pointing out of the feasible prices zeroed.
///
/// Above `alpha / beta` nothing sells and the slope is 0; below the lower
/// bound the DU buys the full cap and the slope is the cap itself.
pub fn projected_gradient(c: &SuCoefficients, price: f64) -> f64 {
    let (lo, hi) = c.price_range();
    let tol = 1e-12 * hi.abs().max(1.0);
    if price > hi + tol {
        return 0.0;
    }
    if price < lo - tol {
        return c.cap.max(0.0);
    }
    let g = pricing_gradient(c, price);
    let at_top = price >= hi - tol;
    let at_bottom = price <= lo.max(0.0) + tol;
    if (at_top && g > 0.0) || (at_bottom && g < 0.0) {
        0.0
    } else {
        g
    }
}

fn analytic_gradients(coeffs: &GameCoefficients, prices: &[f64]) -> Vec<f64> {
    coeffs
        .su
        .iter()
        .zip(prices)
        .map(|(c, &q)| projected_gradient(c, q))
        .collect()
}

/// Two-sided probe estimate of every SU's own-price gradient.
///
/// SU `n` posts `q_n - delta` and `q_n + delta` with the others unchanged and
/// only reads back its own sale. The lower probe is cut at zero price.
///
/// An SU that sells nothing even at the lower probe sees a flat utility and
/// would never move again. It reports `-q_n` instead, so a step cuts its
/// price by the learning-rate fraction.
pub fn finite_difference_gradient(game: &Game<'_>, prices: &[f64], delta: f64) -> Result<Vec<f64>> {
    let mut probe = prices.to_vec();
    let mut grad = Vec::with_capacity(prices.len());
    for slot in 0..prices.len() {
        let q = prices[slot];
        let lo = (q - delta).max(0.0);
        let hi = q + delta;
        let mut observe = |price: f64| -> Result<(f64, f64)> {
            probe[slot] = price;
            let coeffs = game.coefficients(&probe)?;
            let sold = du_best_response(&coeffs, &probe)[slot];
            Ok((sold, cubic_pricing_value(&coeffs.su[slot], price, sold)))
        };
        let (_, upper) = observe(hi)?;
        let (sold_low, lower) = observe(lo)?;
        probe[slot] = q;
        grad.push(if sold_low > 0.0 {
            (upper - lower) / (hi - lo)
        } else {
            -q
        });
    }
    Ok(grad)
}

/// Whether a converged run stayed within `10 log10(1/eps) + 5` iterations.
pub fn iteration_bound_check(result: &EquilibriumResult, epsilon: f64) -> bool {
    result.converged && (result.iterations_used as f64) <= 10.0 * (1.0 / epsilon).log10() + 5.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{DeviceParams, Position};
    use crate::solver::LearningRates;

    fn reference() -> Scenario {
        Scenario::two_su_reference()
    }

    fn tight() -> SolverConfig {
        SolverConfig::cig().with_epsilon(1e-12)
    }

    #[test]
    fn cig_reaches_a_fixed_point() {
        let s = reference();
        let r = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        assert!(r.converged);
        let game = Game::new(&s, s.all_sus()).unwrap();
        let again = best_response_map(&game, r.prices()).unwrap();
        for (a, b) in again.iter().zip(r.prices()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cig_default_epsilon_is_quick() {
        let s = reference();
        let r = solve_cig(&s, &s.all_sus(), &SolverConfig::cig()).unwrap();
        assert!(r.converged);
        assert!(r.iterations_used <= 15, "{}", r.iterations_used);
        assert_eq!(r.trajectory.len(), r.iterations_used);
        assert!(iteration_bound_check(&r, 1e-3));
    }

    #[test]
    fn gauss_seidel_finds_the_same_equilibrium() {
        let s = reference();
        let jacobi = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        let config = SolverConfig {
            update_order: UpdateOrder::GaussSeidel,
            ..tight()
        };
        let gs = solve_cig(&s, &s.all_sus(), &config).unwrap();
        for (a, b) in jacobi.prices().iter().zip(gs.prices()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_su_settles_after_one_response() {
        let s = reference();
        let r = solve_cig(&s, &ActiveSet::new([1]), &tight()).unwrap();
        assert!(r.converged);
        assert!(r.iterations_used <= 2);
        assert_eq!(r.spectral_radius, None);
    }

    #[test]
    fn mirrored_sus_price_alike() {
        let mut s = reference();
        s.sus[0].workload = 0.0;
        let r = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        assert!((r.prices()[0] - r.prices()[1]).abs() < 1e-12);
        assert!((r.alloc()[0] - r.alloc()[1]).abs() < 1e-12);
    }

    #[test]
    fn icig_tracks_cig() {
        let s = reference();
        let cig = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        let icig = solve_icig(&s, &s.all_sus(), &SolverConfig::icig()).unwrap();
        assert!(icig.converged);
        for (a, b) in icig.prices().iter().zip(cig.prices()) {
            assert!((a - b).abs() / b < 1e-2);
        }
        for rec in &icig.trajectory {
            assert!(rec.prices.iter().all(|q| *q >= 0.0));
        }
    }

    #[test]
    fn zero_learning_rate_freezes_prices() {
        let s = reference();
        let config = SolverConfig {
            learning_rates: LearningRates::Uniform(0.0),
            max_iterations: 20,
            ..SolverConfig::icig()
        };
        let r = solve_icig(&s, &s.all_sus(), &config).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations_used, 20);
        assert_eq!(r.prices(), r.initial.prices.as_slice());
        assert!(!iteration_bound_check(&r, 1e-3));
    }

    #[test]
    fn per_su_rates_must_cover_the_active_set() {
        let s = reference();
        let config = SolverConfig {
            learning_rates: LearningRates::PerSu(vec![0.2]),
            ..SolverConfig::icig()
        };
        assert!(solve_icig(&s, &s.all_sus(), &config).is_err());
    }

    #[test]
    fn probe_gradient_vanishes_at_the_equilibrium() {
        let s = reference();
        let r = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        let game = Game::new(&s, s.all_sus()).unwrap();
        let g = finite_difference_gradient(&game, r.prices(), 1e-5).unwrap();
        assert!(g.iter().all(|g| g.abs() < 1e-4), "{g:?}");
    }

    #[test]
    fn priced_out_su_cuts_its_price() {
        let s = reference();
        let config = SolverConfig {
            initial_prices: InitialPrices::Fixed(vec![0.27, 5.0]),
            ..SolverConfig::icig()
        };
        let game = Game::new(&s, s.all_sus()).unwrap();
        let g = finite_difference_gradient(&game, &[0.27, 5.0], 1e-5).unwrap();
        assert_eq!(g[1], -5.0);
        let cig = solve_cig(&s, &s.all_sus(), &tight()).unwrap();
        let r = solve_icig(&s, &s.all_sus(), &config).unwrap();
        assert!(r.converged);
        for (a, b) in r.prices().iter().zip(cig.prices()) {
            assert!((a - b).abs() / b < 1e-2);
        }
    }

    #[test]
    fn projected_gradient_outside_the_range() {
        let s = reference();
        let game = Game::new(&s, s.all_sus()).unwrap();
        let c = game.coefficients(&[0.27, 0.23]).unwrap();
        let (lo, hi) = c.su[0].price_range();
        assert_eq!(projected_gradient(&c.su[0], hi + 1.0), 0.0);
        assert_eq!(projected_gradient(&c.su[0], lo - 1.0), c.su[0].cap);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let s = reference();
        let a = solve_icig(&s, &s.all_sus(), &SolverConfig::icig()).unwrap();
        let b = solve_icig(&s, &s.all_sus(), &SolverConfig::icig()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loose_epsilon_needs_fewer_iterations() {
        let s = reference();
        let loose = solve_cig(&s, &s.all_sus(), &SolverConfig::cig().with_epsilon(1e-1)).unwrap();
        let strict = solve_cig(&s, &s.all_sus(), &SolverConfig::cig()).unwrap();
        assert!(loose.iterations_used <= strict.iterations_used);
    }

    #[test]
    fn wrong_initial_price_count_is_rejected() {
        let s = reference();
        let config = SolverConfig {
            initial_prices: InitialPrices::Fixed(vec![0.1]),
            ..SolverConfig::cig()
        };
        assert!(solve_cig(&s, &s.all_sus(), &config).is_err());
    }

    #[test]
    fn three_sus_have_no_spectral_radius() {
        let mut s = Scenario::three_su_reference(0.05);
        s.sus
            .push(DeviceParams::su(4, Position::new(-20.0, -20.0), 0.0));
        let r = solve_cig(&s, &s.all_sus(), &SolverConfig::cig()).unwrap();
        assert!(r.spectral_radius.is_none());
    }
}
