//! DU and SU utilities.

use crate::energy::{
    compute_energy_coefficient, du_baseline_energy, du_energy_per_mb, du_offload_energy,
    local_exec_energy, power_limited_capacity, required_tx_power, slot_share, su_compute_energy,
    SuBaseline, CAP_RTOL,
};
use crate::error::{Constraint, Error, Result};
use crate::game::{GameCoefficients, StrategyProfile, SuCoefficients};
use crate::scenario::{ActiveSet, Scenario};

/// Energy terms of one SU.
#[derive(Debug, Clone, PartialEq)]
pub struct SuEnergy {
    /// Own task alone.
    pub baseline: f64,
    /// Receiver energy; charged only when the SU sells something.
    pub receive: f64,
    /// Own task plus the accepted DU load.
    pub compute: f64,
}

/// Every energy term entering the utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    /// DU running its whole task locally.
    pub du_baseline: f64,
    /// DU running what it keeps. Negative when the profile offloads more than
    /// `L_0`, which the best response allows until SU selection trims it.
    pub du_compute: f64,
    pub du_offload: f64,
    pub su: Vec<SuEnergy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    pub u_du: f64,
    pub u_su: Vec<f64>,
    pub energy: EnergyBreakdown,
}

impl UtilityReport {
    /// DU utility recomputed from the energy breakdown.
    pub fn du_from_breakdown(&self, profile: &StrategyProfile, v: f64) -> f64 {
        let e = &self.energy;
        (e.du_baseline - e.du_compute - e.du_offload)
            - payment(profile)
            - substitution_penalty(&profile.alloc, v)
    }
}

/// `1/2 (sum l^2 + 2 v sum_{n<k} l_n l_k)`.
pub fn substitution_penalty(alloc: &[f64], v: f64) -> f64 {
    let squares: f64 = alloc.iter().map(|l| l * l).sum();
    0.5 * (squares + 2.0 * v * pair_products(alloc))
}

/// `sum_{n<k} l_n l_k`.
fn pair_products(alloc: &[f64]) -> f64 {
    let mut pairs = 0.0;
    for n in 0..alloc.len() {
        for k in n + 1..alloc.len() {
            pairs += alloc[n] * alloc[k];
        }
    }
    pairs
}

fn payment(profile: &StrategyProfile) -> f64 {
    profile
        .prices
        .iter()
        .zip(&profile.alloc)
        .map(|(q, l)| q * l)
        .sum()
}

fn check_profile(profile: &StrategyProfile, scenario: &Scenario, active: &ActiveSet) -> Result<()> {
    active.check_within(scenario)?;
    if profile.alloc.len() != active.len() || profile.prices.len() != active.len() {
        return Err(Error::invalid(
            "profile",
            format!(
                "expected {} entries, got {} allocations and {} prices",
                active.len(),
                profile.alloc.len(),
                profile.prices.len()
            ),
        ));
    }
    Ok(())
}

/// Checks the per-SU DU constraints: allocation range and transmit power cap.
fn check_du_constraints(
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
    gains: &[f64],
) -> Result<()> {
    let sys = &scenario.system;
    let l0 = scenario.du.workload;
    for ((&l, &g), index) in profile.alloc.iter().zip(gains).zip(active.iter()) {
        let id = scenario.sus[index].id;
        if !(l >= 0.0) || l > l0 * (1.0 + CAP_RTOL) {
            return Err(Error::ConstraintViolation {
                constraint: Constraint::AllocationRange,
                detail: format!("{id}: allocation {l} outside [0, {l0}]"),
            });
        }
        let cap = power_limited_capacity(g, sys, active.len());
        if l > cap * (1.0 + CAP_RTOL) {
            let p = required_tx_power(l, g, sys, active.len())?;
            return Err(Error::ConstraintViolation {
                constraint: Constraint::TxPower,
                detail: format!("{id}: needs {p} W above the {} W cap", sys.max_tx_power),
            });
        }
    }
    Ok(())
}

fn gains(scenario: &Scenario, active: &ActiveSet) -> Result<Vec<f64>> {
    active
        .iter()
        .map(|i| {
            crate::energy::channel_gain(
                &scenario.du.position,
                &scenario.sus[i].position,
                &scenario.system,
            )
        })
        .collect()
}

/// DU utility with the exact exponential offload energy.
pub fn du_utility_exact(
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
) -> Result<f64> {
    Ok(utility_report(profile, scenario, active)?.u_du)
}

/// DU utility with the offload energy expanded to second order around zero.
pub fn du_utility_quadratic(profile: &StrategyProfile, coeffs: &GameCoefficients) -> Result<f64> {
    if profile.alloc.len() != coeffs.su.len() || profile.prices.len() != coeffs.su.len() {
        return Err(Error::invalid(
            "profile",
            "length does not match the coefficients",
        ));
    }
    for (c, &l) in coeffs.su.iter().zip(&profile.alloc) {
        if !(l >= 0.0) || l > coeffs.du_workload * (1.0 + CAP_RTOL) {
            return Err(Error::ConstraintViolation {
                constraint: Constraint::AllocationRange,
                detail: format!("{}: allocation {l}", c.id),
            });
        }
        if l > c.power_cap * (1.0 + CAP_RTOL) {
            return Err(Error::ConstraintViolation {
                constraint: Constraint::TxPower,
                detail: format!(
                    "{}: allocation {l} above power-limited {}",
                    c.id, c.power_cap
                ),
            });
        }
    }
    Ok(du_quadratic_value(coeffs, &profile.prices, &profile.alloc))
}

/// Unchecked quadratic DU utility, also used by the grid oracles.
pub(crate) fn du_quadratic_value(coeffs: &GameCoefficients, prices: &[f64], alloc: &[f64]) -> f64 {
    let mut curvature_terms = 0.0;
    let mut linear = 0.0;
    for ((c, &q), &l) in coeffs.su.iter().zip(prices).zip(alloc) {
        curvature_terms += (coeffs.h2 / c.gain + 1.0) * l * l;
        linear += (coeffs.a - coeffs.h1 / c.gain - q) * l;
    }
    -0.5 * (curvature_terms + 2.0 * coeffs.substitutability * pair_products(alloc)) + linear
}

/// Upper bound on `|exact - quadratic|` DU utility from the Lagrange remainder
/// of `2^(l / (B T / |N|))`: `sum_n sigma^2 t_n / g_n * c^3 e^(c l_n) l_n^3 / 6`
/// with `c = ln 2 / (B T / |N|)`.
pub fn maclaurin_remainder_bound(coeffs: &GameCoefficients, alloc: &[f64]) -> f64 {
    let c = std::f64::consts::LN_2 / coeffs.slot_capacity;
    coeffs
        .su
        .iter()
        .zip(alloc)
        .map(|(su, &l)| {
            coeffs.noise_power * coeffs.slot_share / su.gain * c.powi(3) * (c * l).exp() * l.powi(3)
                / 6.0
        })
        .sum()
}

/// Utility of the SU in `slot` of the active set.
///
/// Zero when the SU sells nothing; otherwise revenue minus receive energy minus
/// extra compute energy.
pub fn su_utility(
    slot: usize,
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
) -> Result<f64> {
    check_profile(profile, scenario, active)?;
    let report = su_energy(slot, profile.alloc[slot], scenario, active)?;
    Ok(su_utility_from(
        profile.prices[slot],
        profile.alloc[slot],
        &report,
        scenario,
        &scenario.sus[active.indices()[slot]],
    ))
}

fn su_energy(slot: usize, l: f64, scenario: &Scenario, active: &ActiveSet) -> Result<SuEnergy> {
    let dev = scenario
        .sus
        .get(active.indices()[slot])
        .ok_or_else(|| Error::invalid("slot", "out of range"))?;
    let t = scenario.system.slot_length;
    let receive = if l > 0.0 {
        dev.p_rec * slot_share(active.len(), t)?
    } else {
        0.0
    };
    Ok(SuEnergy {
        baseline: local_exec_energy(dev, dev.workload, t)?,
        receive,
        compute: su_compute_energy(dev, l, t)?,
    })
}

fn su_utility_from(
    price: f64,
    l: f64,
    energy: &SuEnergy,
    scenario: &Scenario,
    dev: &crate::energy::DeviceParams,
) -> f64 {
    let baseline = match scenario.system.su_baseline {
        SuBaseline::OwnWorkload => energy.baseline,
        SuBaseline::DuWorkload => {
            compute_energy_coefficient(dev, scenario.system.slot_length)
                * scenario.du.workload.powi(3)
        }
    };
    if l == 0.0 && scenario.system.su_baseline == SuBaseline::OwnWorkload {
        return 0.0;
    }
    price * l - energy.receive - (energy.compute - baseline)
}

/// DU and SU utilities together with the underlying energies.
pub fn utility_report(
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
) -> Result<UtilityReport> {
    check_profile(profile, scenario, active)?;
    let gains = gains(scenario, active)?;
    check_du_constraints(profile, scenario, active, &gains)?;
    let du = &scenario.du;
    let total: f64 = profile.alloc.iter().sum();
    let du_baseline = du_baseline_energy(du);
    let du_compute = du_energy_per_mb(du) * (du.workload - total);
    let du_offload = du_offload_energy(&profile.alloc, &gains, &scenario.system)?;

    let mut su = Vec::with_capacity(active.len());
    let mut u_su = Vec::with_capacity(active.len());
    for (slot, index) in active.iter().enumerate() {
        let l = profile.alloc[slot];
        let energy = su_energy(slot, l, scenario, active)?;
        u_su.push(su_utility_from(
            profile.prices[slot],
            l,
            &energy,
            scenario,
            &scenario.sus[index],
        ));
        su.push(energy);
    }
    let u_du = (du_baseline - du_compute - du_offload)
        - payment(profile)
        - substitution_penalty(&profile.alloc, scenario.system.substitutability);
    Ok(UtilityReport {
        u_du,
        u_su,
        energy: EnergyBreakdown {
            du_baseline,
            du_compute,
            du_offload,
            su,
        },
    })
}

/// The SU's pricing objective with the DU's clamped demand substituted:
/// `q l(q) - p_rec t_n - F ((L + l(q))^3 - L^3)`.
///
/// The receive energy is a constant here, so the objective is continuous in
/// `q`; this is what best responses, gradient probes and oracles optimize.
pub fn su_pricing_objective(c: &SuCoefficients, price: f64) -> f64 {
    let l = c.demand(price);
    cubic_pricing_value(c, price, l)
}

/// Same objective with the unclamped demand `alpha - beta q`.
pub fn su_pricing_objective_unclamped(c: &SuCoefficients, price: f64) -> f64 {
    cubic_pricing_value(c, price, c.alpha - c.beta * price)
}

/// Pricing objective for an observed sale `l` at `price`.
pub(crate) fn cubic_pricing_value(c: &SuCoefficients, price: f64, l: f64) -> f64 {
    let own = c.workload;
    price * l - c.receive_energy - c.compute_coeff * ((own + l).powi(3) - own.powi(3))
}
