//! Brute-force reference solutions for checking the closed forms.

use crate::error::{Error, Result};
use crate::game::{du_quadratic_value, su_pricing_objective, Game};
use crate::scenario::{ActiveSet, Scenario};
use crate::solver::best_response_map;

/// Grids with more points than this are refused.
pub const GRID_LIMIT: f64 = 1e8;
pub const DEFAULT_ALLOC_STEP: f64 = 1e-4;
pub const DEFAULT_PRICE_STEP: f64 = 1e-5;

/// `lo, lo + step, ...` and finally `hi` itself.
fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).floor().max(0.0) as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if pts.last().is_some_and(|&x| x < hi) {
        pts.push(hi);
    }
    pts
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("grid_step", "must be positive"))
    }
}

/// Exhaustive argmax of the quadratic DU utility over the box of caps.
pub fn oracle_du_allocation(
    scenario: &Scenario,
    active: &ActiveSet,
    prices: &[f64],
    grid_step: f64,
) -> Result<Vec<f64>> {
    check_step(grid_step)?;
    let coeffs = Game::new(scenario, active.clone())?.coefficients(prices)?;
    let axes: Vec<Vec<f64>> = coeffs
        .su
        .iter()
        .map(|c| {
            let cap = c.cap.max(0.0);
            let points = (cap / grid_step).floor() + 2.0;
            if points > GRID_LIMIT {
                Err(Error::GridTooLarge {
                    points,
                    limit: GRID_LIMIT,
                })
            } else {
                Ok(axis(0.0, cap, grid_step))
            }
        })
        .collect::<Result<_>>()?;
    let points: f64 = axes.iter().map(|a| a.len() as f64).product();
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }

    if axes.is_empty() {
        return Ok(Vec::new());
    }
    // Along axis 0 the utility is `base + l (lin0 - e0 l / 2 - v rest)`, so
    // the innermost scan needs no call into the general evaluator.
    let v = coeffs.substitutability;
    let lin: Vec<f64> = coeffs
        .su
        .iter()
        .zip(prices)
        .map(|(c, &q)| coeffs.a - coeffs.h1 / c.gain - q)
        .collect();
    let curv: Vec<f64> = coeffs.su.iter().map(|c| coeffs.h2 / c.gain + 1.0).collect();
    let dims = axes.len();
    let mut idx = vec![0usize; dims];
    let mut alloc: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut best = alloc.clone();
    let mut best_value = f64::NEG_INFINITY;
    loop {
        let mut base = du_quadratic_value(&coeffs, prices, &alloc);
        let rest: f64 = alloc[1..].iter().sum();
        base -= alloc[0] * (lin[0] - 0.5 * curv[0] * alloc[0] - v * rest);
        for &l in &axes[0] {
            let value = base + l * (lin[0] - 0.5 * curv[0] * l - v * rest);
            if value > best_value {
                best_value = value;
                best.clone_from(&alloc);
                best[0] = l;
            }
        }
        // Odometer increment over the remaining axes.
        let mut d = 1;
        loop {
            if d >= dims {
                return Ok(best);
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                alloc[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            alloc[d] = axes[d][0];
            d += 1;
        }
    }
}

/// Price-grid argmax of the SU's pricing objective over its useful range,
/// with the opponents at `prices` (the SU's own entry is ignored).
pub fn oracle_su_price(
    scenario: &Scenario,
    active: &ActiveSet,
    slot: usize,
    prices: &[f64],
    grid_step: f64,
) -> Result<f64> {
    check_step(grid_step)?;
    let coeffs = Game::new(scenario, active.clone())?.coefficients(prices)?;
    let c = coeffs
        .su
        .get(slot)
        .ok_or_else(|| Error::invalid("slot", "out of range"))?;
    let (lo, hi) = c.price_range();
    let lo = lo.max(0.0);
    let points = ((hi - lo) / grid_step).floor() + 2.0;
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let mut best = lo;
    let mut best_value = f64::NEG_INFINITY;
    for q in axis(lo, hi, grid_step) {
        let value = su_pricing_objective(c, q);
        if value > best_value {
            best_value = value;
            best = q;
        }
    }
    Ok(best)
}

/// Objective values of the SU in `slot` along its price grid.
pub fn price_profile(
    scenario: &Scenario,
    active: &ActiveSet,
    slot: usize,
    prices: &[f64],
    grid_step: f64,
) -> Result<Vec<(f64, f64)>> {
    check_step(grid_step)?;
    let coeffs = Game::new(scenario, active.clone())?.coefficients(prices)?;
    let c = coeffs
        .su
        .get(slot)
        .ok_or_else(|| Error::invalid("slot", "out of range"))?;
    let (lo, hi) = c.price_range();
    Ok(axis(lo.max(0.0), hi, grid_step)
        .into_iter()
        .map(|q| (q, su_pricing_objective(c, q)))
        .collect())
}

/// Whether `values` rise (weakly) up to their maximum and fall (weakly) after it.
pub fn is_unimodal(values: &[f64]) -> bool {
    let Some(peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return true;
    };
    values[..=peak].windows(2).all(|w| w[0] <= w[1])
        && values[peak..].windows(2).all(|w| w[0] >= w[1])
}

/// Central-difference Jacobian of the simultaneous best-response price map.
pub fn fd_jacobian(
    scenario: &Scenario,
    active: &ActiveSet,
    prices: &[f64],
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    check_step(step)?;
    let game = Game::new(scenario, active.clone())?;
    let n = prices.len();
    let mut jac = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut up = prices.to_vec();
        let mut down = prices.to_vec();
        up[k] += step;
        down[k] = (down[k] - step).max(0.0);
        let width = up[k] - down[k];
        let a = best_response_map(&game, &up)?;
        let b = best_response_map(&game, &down)?;
        for row in 0..n {
            jac[row][k] = (a[row] - b[row]) / width;
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{du_best_response, su_best_response_price};
    use crate::solver::{solve_cig, SolverConfig};

    fn equilibrium_prices(s: &Scenario, active: &ActiveSet) -> Vec<f64> {
        solve_cig(s, active, &SolverConfig::cig().with_epsilon(1e-12))
            .unwrap()
            .final_profile
            .prices
    }

    #[test]
    fn single_su_allocation_matches() {
        let s = Scenario::two_su_reference();
        let active = ActiveSet::new([1]);
        let q = equilibrium_prices(&s, &active);
        let coeffs = Game::new(&s, active.clone())
            .unwrap()
            .coefficients(&q)
            .unwrap();
        let closed = du_best_response(&coeffs, &q);
        let grid = oracle_du_allocation(&s, &active, &q, 1e-4).unwrap();
        assert!((closed[0] - grid[0]).abs() <= 1e-4);
    }

    #[test]
    fn fast_scan_agrees_with_direct_evaluation() {
        let s = Scenario::three_su_reference(0.1);
        let active = s.all_sus();
        let prices = [0.25, 0.22, 0.24];
        let step = 0.01;
        let got = oracle_du_allocation(&s, &active, &prices, step).unwrap();
        let coeffs = Game::new(&s, active.clone())
            .unwrap()
            .coefficients(&prices)
            .unwrap();
        let axes: Vec<Vec<f64>> = coeffs.su.iter().map(|c| axis(0.0, c.cap, step)).collect();
        let mut best = (f64::NEG_INFINITY, vec![]);
        for &a in &axes[0] {
            for &b in &axes[1] {
                for &c in &axes[2] {
                    let x = vec![a, b, c];
                    let value = du_quadratic_value(&coeffs, &prices, &x);
                    if value > best.0 {
                        best = (value, x);
                    }
                }
            }
        }
        assert_eq!(got, best.1);
    }

    #[test]
    fn top_prices_buy_nothing() {
        let s = Scenario::two_su_reference();
        let game = Game::new(&s, s.all_sus()).unwrap();
        let q = game.upper_price_bounds().unwrap();
        let grid = oracle_du_allocation(&s, &s.all_sus(), &q, 1e-3).unwrap();
        assert_eq!(grid, vec![0.0, 0.0]);
    }

    #[test]
    fn price_oracle_matches_and_is_unimodal() {
        let s = Scenario::two_su_reference();
        let active = s.all_sus();
        let q = equilibrium_prices(&s, &active);
        let coeffs = Game::new(&s, active.clone())
            .unwrap()
            .coefficients(&q)
            .unwrap();
        for slot in 0..2 {
            let closed = su_best_response_price(&coeffs, slot).unwrap();
            let grid = oracle_su_price(&s, &active, slot, &q, 1e-5).unwrap();
            assert!((closed - grid).abs() <= 1e-5);
            let values: Vec<f64> = price_profile(&s, &active, slot, &q, 1e-4)
                .unwrap()
                .into_iter()
                .map(|p| p.1)
                .collect();
            assert!(is_unimodal(&values));
        }
    }

    #[test]
    fn zero_capacity_leaves_one_price() {
        let mut s = Scenario::two_su_reference();
        let t = s.system.slot_length;
        s.sus[0].workload = t * s.sus[0].f_max / s.sus[0].cycles_per_mb;
        let active = s.all_sus();
        let coeffs = Game::new(&s, active.clone())
            .unwrap()
            .coefficients(&[0.2, 0.2])
            .unwrap();
        assert!(coeffs.su[0].cap.abs() < 1e-12);
        let q = oracle_su_price(&s, &active, 0, &[0.2, 0.2], 1e-5).unwrap();
        assert_eq!(q, coeffs.su[0].alpha / coeffs.su[0].beta);
    }

    #[test]
    fn oversized_grids_are_refused() {
        let s = Scenario::two_su_reference();
        let err = oracle_du_allocation(&s, &s.all_sus(), &[0.1, 0.1], 1e-6).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
    }

    #[test]
    fn unimodality_detector() {
        assert!(is_unimodal(&[1.0, 2.0, 3.0, 2.0]));
        assert!(!is_unimodal(&[1.0, 3.0, 2.0, 3.5, 1.0]));
        assert!(is_unimodal(&[]));
    }
}
