//! Closed-form best responses of the DU and the SUs.

use crate::error::{Error, Result};
use crate::game::{clamp, su_pricing_objective_unclamped, GameCoefficients, SuCoefficients};

/// DU purchase `[alpha_n - beta_n q_n]_0^{Q_n}` for every SU.
///
/// The total-offload constraint is deliberately not applied here; SU
/// selection enforces it.
pub fn du_best_response(coeffs: &GameCoefficients, prices: &[f64]) -> Vec<f64> {
    coeffs
        .su
        .iter()
        .zip(prices)
        .map(|(c, &q)| c.demand(q))
        .collect()
}

fn check_domain(c: &SuCoefficients) -> Result<()> {
    if !(c.beta > 0.0) {
        return Err(Error::invalid(format!("{}.beta", c.id), "must be positive"));
    }
    if !(c.compute_coeff > 0.0) {
        return Err(Error::invalid(
            format!("{}.compute_coeff", c.id),
            "must be positive",
        ));
    }
    Ok(())
}

/// Smaller root of `alpha - 2 beta q + 3 F beta (L + alpha - beta q)^2 = 0`:
/// `(3 L F beta + 3 F alpha beta + 1 - sqrt(zeta)) / (3 F beta^2)` with
/// `zeta = 6 F L beta + 3 F alpha beta + 1`.
///
/// The larger root always sits above `alpha / beta`, where the SU sells nothing.
pub fn stationary_price(c: &SuCoefficients) -> Result<f64> {
    check_domain(c)?;
    let f = c.compute_coeff;
    let (a, b, l) = (c.alpha, c.beta, c.workload);
    let zeta = 6.0 * f * l * b + 3.0 * f * a * b + 1.0;
    if !(zeta >= 0.0) {
        return Err(Error::Internal(format!(
            "{}: negative discriminant {zeta}",
            c.id
        )));
    }
    Ok((3.0 * l * f * b + 3.0 * f * a * b + 1.0 - zeta.sqrt()) / (3.0 * f * b * b))
}

/// `zeta_n`, the discriminant term of the stationary price.
pub(crate) fn discriminant(c: &SuCoefficients) -> f64 {
    let f = c.compute_coeff;
    6.0 * f * c.workload * c.beta + 3.0 * f * c.alpha * c.beta + 1.0
}

/// Optimal price of the SU in `slot`: the stationary price clamped to the
/// SU's useful price range.
pub fn su_best_response_price(coeffs: &GameCoefficients, slot: usize) -> Result<f64> {
    let c = coeffs
        .su
        .get(slot)
        .ok_or_else(|| Error::invalid("slot", "out of range"))?;
    let mu = stationary_price(c)?;
    let (lo, hi) = c.price_range();
    Ok(clamp(mu, lo, hi))
}

/// `dU_n/dq_n` with unclamped demand: `l - beta q + 3 F beta (L + l)^2`.
pub fn pricing_gradient(c: &SuCoefficients, price: f64) -> f64 {
    let l = c.alpha - c.beta * price;
    l - c.beta * price + 3.0 * c.compute_coeff * c.beta * (c.workload + l).powi(2)
}

/// `d^2 U_n / dq_n^2 = -2 beta - 6 F beta^2 (L + l)`.
pub fn pricing_curvature(c: &SuCoefficients, price: f64) -> f64 {
    let l = c.alpha - c.beta * price;
    -2.0 * c.beta - 6.0 * c.compute_coeff * c.beta * c.beta * (c.workload + l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// Finite-difference curvature negative at every grid point.
    pub concave: bool,
    /// First grid price with a non-negative finite-difference curvature.
    pub violation: Option<f64>,
    /// Worst relative gap between analytic and finite-difference curvature.
    pub max_relative_mismatch: f64,
    /// Finite-difference half-width used.
    pub step: f64,
}

/// Checks concavity of the SU's pricing utility on `grid` by central second
/// differences, and compares them with the analytic curvature.
///
/// The utility is cubic in the price, so the central difference is exact up
/// to rounding for any step.
pub fn verify_concavity(
    coeffs: &GameCoefficients,
    slot: usize,
    grid: &[f64],
) -> Result<ConcavityReport> {
    let c = coeffs
        .su
        .get(slot)
        .ok_or_else(|| Error::invalid("slot", "out of range"))?;
    check_domain(c)?;
    let (lo, hi) = c.price_range();
    let step = 1e-3 * (hi - lo).max(1e-3);
    let mut violation = None;
    let mut worst: f64 = 0.0;
    for &q in grid {
        let u = |x: f64| su_pricing_objective_unclamped(c, x);
        let fd = (u(q + step) - 2.0 * u(q) + u(q - step)) / (step * step);
        if !(fd < 0.0) && violation.is_none() {
            violation = Some(q);
        }
        let analytic = pricing_curvature(c, q);
        worst = worst.max((fd - analytic).abs() / analytic.abs());
    }
    Ok(ConcavityReport {
        concave: violation.is_none(),
        violation,
        max_relative_mismatch: worst,
        step,
    })
}

/// `points` equally spaced prices strictly inside the SU's price range.
pub fn interior_price_grid(c: &SuCoefficients, points: usize) -> Vec<f64> {
    let (lo, hi) = c.price_range();
    (1..=points)
        .map(|i| lo + (hi - lo) * i as f64 / (points + 1) as f64)
        .collect()
}
