//! Physical-layer and computation energy model.
//!
//! Canonical units throughout the crate: data in Mb, time in s, power in W,
//! energy in J, bandwidth in Mb/s per unit of `log2(1 + SNR)`.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};

/// Default parameter values of the reference simulation setup.
pub mod defaults {
    pub const SLOT_LENGTH: f64 = 0.2;
    pub const BANDWIDTH: f64 = 1.0;
    pub const KAPPA: f64 = 1e-28;
    pub const CYCLES_PER_MB: f64 = 8e8;
    pub const DU_F_MAX: f64 = 2.4e9;
    pub const SU_F_MAX: f64 = 1.5e9;
    pub const MAX_TX_POWER: f64 = 0.1;
    pub const SU_P_REC: f64 = 0.01;
    pub const NOISE_POWER: f64 = 1e-9;
    pub const SUBSTITUTABILITY: f64 = 0.5;
    pub const PATHLOSS_CONSTANT: f64 = 0.001;
    pub const PATHLOSS_EXPONENT: f64 = 3.0;
    pub const DU_WORKLOAD: f64 = 0.6;
}

/// Relative slack allowed on frequency and power caps before a load is
/// declared infeasible.
pub const CAP_RTOL: f64 = 1e-9;

/// Distances below this are rejected as degenerate geometry.
pub const MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceId {
    Du,
    Su(u32),
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceId::Du => f.write_str("DU"),
            DeviceId::Su(id) => write!(f, "SU {id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Per-device physical constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub id: DeviceId,
    /// Effective switched capacitance.
    pub kappa: f64,
    /// CPU cycles needed per Mb of input.
    pub cycles_per_mb: f64,
    /// Maximum CPU frequency (cycles/s).
    pub f_max: f64,
    /// Receiver circuit power (W). Unused for the DU.
    pub p_rec: f64,
    pub position: Position,
    /// Own task input size (Mb).
    pub workload: f64,
}

impl DeviceParams {
    /// A DU with the reference constants.
    pub fn du(position: Position, workload: f64) -> Self {
        Self {
            id: DeviceId::Du,
            kappa: defaults::KAPPA,
            cycles_per_mb: defaults::CYCLES_PER_MB,
            f_max: defaults::DU_F_MAX,
            p_rec: 0.0,
            position,
            workload,
        }
    }

    /// An SU with the reference constants.
    pub fn su(id: u32, position: Position, workload: f64) -> Self {
        Self {
            id: DeviceId::Su(id),
            kappa: defaults::KAPPA,
            cycles_per_mb: defaults::CYCLES_PER_MB,
            f_max: defaults::SU_F_MAX,
            p_rec: defaults::SU_P_REC,
            position,
            workload,
        }
    }

    /// CPU frequency needed to finish `load` Mb within one slot.
    pub fn required_frequency(&self, load: f64, slot_length: f64) -> f64 {
        self.cycles_per_mb * load / slot_length
    }

    fn check_frequency(&self, load: f64, slot_length: f64) -> Result<()> {
        let required_hz = self.required_frequency(load, slot_length);
        if required_hz > self.f_max * (1.0 + CAP_RTOL) {
            return Err(Error::FrequencyInfeasible {
                device: self.id,
                required_hz,
                f_max_hz: self.f_max,
            });
        }
        Ok(())
    }

    pub fn validate(&self, slot_length: f64) -> Result<()> {
        let field = |name: &str| format!("{}.{name}", self.id);
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(field("kappa"), "must be positive"));
        }
        if !(self.cycles_per_mb > 0.0 && self.cycles_per_mb.is_finite()) {
            return Err(Error::invalid(field("cycles_per_mb"), "must be positive"));
        }
        if !(self.f_max > 0.0 && self.f_max.is_finite()) {
            return Err(Error::invalid(field("f_max"), "must be positive"));
        }
        if !(self.p_rec >= 0.0 && self.p_rec.is_finite()) {
            return Err(Error::invalid(field("p_rec"), "must be non-negative"));
        }
        if !(self.workload >= 0.0 && self.workload.is_finite()) {
            return Err(Error::invalid(field("workload"), "must be non-negative"));
        }
        if !(self.position.x.is_finite() && self.position.y.is_finite()) {
            return Err(Error::invalid(field("position"), "must be finite"));
        }
        self.check_frequency(self.workload, slot_length)
    }
}

/// Which own-workload cube an SU's pricing utility subtracts as baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuBaseline {
    /// `(L_n + l)^3 - L_n^3`: the SU's own execution energy.
    #[default]
    OwnWorkload,
    /// `(L_n + l)^3 - L_0^3`, the literal printed variant. Shifts utilities by a
    /// constant and leaves every best response unchanged.
    DuWorkload,
}

/// System-wide constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Slot duration `T` (s).
    pub slot_length: f64,
    /// Bandwidth `B` (Mb/s per unit spectral efficiency).
    pub bandwidth: f64,
    /// Receiver noise power `sigma^2` (W).
    pub noise_power: f64,
    /// DU transmit power cap `P` (W).
    pub max_tx_power: f64,
    pub pathloss_constant: f64,
    pub pathloss_exponent: f64,
    /// Resource substitutability `v` in `[0, 1]`.
    pub substitutability: f64,
    pub su_baseline: SuBaseline,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            slot_length: defaults::SLOT_LENGTH,
            bandwidth: defaults::BANDWIDTH,
            noise_power: defaults::NOISE_POWER,
            max_tx_power: defaults::MAX_TX_POWER,
            pathloss_constant: defaults::PATHLOSS_CONSTANT,
            pathloss_exponent: defaults::PATHLOSS_EXPONENT,
            substitutability: defaults::SUBSTITUTABILITY,
            su_baseline: SuBaseline::OwnWorkload,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("system.slot_length", self.slot_length),
            ("system.bandwidth", self.bandwidth),
            ("system.noise_power", self.noise_power),
            ("system.max_tx_power", self.max_tx_power),
            ("system.pathloss_constant", self.pathloss_constant),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        if !self.pathloss_exponent.is_finite() {
            return Err(Error::invalid("system.pathloss_exponent", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.substitutability) {
            return Err(Error::invalid("system.v", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Data one SU slot can carry at unit spectral efficiency: `B T / |N|`.
    pub fn slot_capacity(&self, active_count: usize) -> f64 {
        self.bandwidth * self.slot_length / active_count as f64
    }
}

/// Energy of running `load` Mb within one slot at the just-sufficient frequency.
pub fn local_exec_energy(dev: &DeviceParams, load: f64, slot_length: f64) -> Result<f64> {
    if load < 0.0 {
        return Err(Error::invalid("load", "must be non-negative"));
    }
    dev.check_frequency(load, slot_length)?;
    let cycles = dev.cycles_per_mb * load;
    Ok(dev.kappa * cycles.powi(3) / (slot_length * slot_length))
}

/// Path-loss channel gain `c / d^e`.
pub fn channel_gain(tx: &Position, rx: &Position, sys: &SystemParams) -> Result<f64> {
    let distance = tx.distance(rx);
    if !(distance >= MIN_DISTANCE) {
        return Err(Error::DegenerateGeometry { distance });
    }
    Ok(sys.pathloss_constant / distance.powf(sys.pathloss_exponent))
}

/// Equal receive slot given to each active SU.
pub fn slot_share(active_count: usize, slot_length: f64) -> Result<f64> {
    if active_count == 0 {
        return Err(Error::EmptyActiveSet);
    }
    Ok(slot_length / active_count as f64)
}

/// Achievable rate `B log2(1 + p g / sigma^2)` in Mb/s.
pub fn achievable_rate(power: f64, gain: f64, sys: &SystemParams) -> f64 {
    sys.bandwidth * (power * gain / sys.noise_power).ln_1p() / LN_2
}

/// Minimum DU transmit power that delivers `l` Mb within one SU slot.
pub fn required_tx_power(
    l: f64,
    gain: f64,
    sys: &SystemParams,
    active_count: usize,
) -> Result<f64> {
    if active_count == 0 {
        return Err(Error::EmptyActiveSet);
    }
    if l < 0.0 {
        return Err(Error::invalid("allocation", "must be non-negative"));
    }
    if !(gain > 0.0) {
        return Err(Error::invalid("gain", "must be positive"));
    }
    let exponent = l / sys.slot_capacity(active_count);
    Ok((exponent * LN_2).exp_m1() * sys.noise_power / gain)
}

/// Largest allocation the power cap allows within one SU slot.
pub fn power_limited_capacity(gain: f64, sys: &SystemParams, active_count: usize) -> f64 {
    (sys.max_tx_power * gain / sys.noise_power).ln_1p() / LN_2 * sys.slot_capacity(active_count)
}

/// DU transmit energy to deliver every allocation; the active count is `alloc.len()`.
pub fn du_offload_energy(alloc: &[f64], gains: &[f64], sys: &SystemParams) -> Result<f64> {
    if alloc.len() != gains.len() {
        return Err(Error::Internal(format!(
            "{} allocations but {} gains",
            alloc.len(),
            gains.len()
        )));
    }
    let count = alloc.len();
    if count == 0 {
        return Ok(0.0);
    }
    let t_n = slot_share(count, sys.slot_length)?;
    alloc.iter().zip(gains).try_fold(0.0, |acc, (&l, &g)| {
        Ok(acc + required_tx_power(l, g, sys, count)? * t_n)
    })
}

/// DU energy per Mb at its pinned maximum frequency, `kappa_0 (f_0^max)^2 C_0`.
pub fn du_energy_per_mb(du: &DeviceParams) -> f64 {
    du.kappa * du.f_max * du.f_max * du.cycles_per_mb
}

/// DU energy for running its whole task locally at `f_0^max`.
pub fn du_baseline_energy(du: &DeviceParams) -> f64 {
    du_energy_per_mb(du) * du.workload
}

/// DU energy for the part of its task left after offloading.
pub fn du_residual_energy(du: &DeviceParams, total_offloaded: f64) -> Result<f64> {
    if total_offloaded < 0.0 {
        return Err(Error::invalid("total_offloaded", "must be non-negative"));
    }
    if total_offloaded > du.workload * (1.0 + CAP_RTOL) {
        return Err(Error::OverOffload {
            offloaded: total_offloaded,
            workload: du.workload,
        });
    }
    Ok(du_energy_per_mb(du) * (du.workload - total_offloaded).max(0.0))
}

/// SU receiver energy over its slot.
pub fn su_receive_energy(su: &DeviceParams, active_count: usize, slot_length: f64) -> Result<f64> {
    Ok(su.p_rec * slot_share(active_count, slot_length)?)
}

/// SU energy to run its own task plus `accepted` Mb of DU work in one slot.
pub fn su_compute_energy(su: &DeviceParams, accepted: f64, slot_length: f64) -> Result<f64> {
    if accepted < 0.0 {
        return Err(Error::invalid("accepted", "must be non-negative"));
    }
    local_exec_energy(su, su.workload + accepted, slot_length)
}

/// Largest extra load the SU CPU can absorb within one slot, `T f^max / C - L`.
pub fn frequency_limited_capacity(su: &DeviceParams, slot_length: f64) -> f64 {
    slot_length * su.f_max / su.cycles_per_mb - su.workload
}

/// `kappa C^3 / T^2`, the cubic coefficient of an SU's compute energy.
pub fn compute_energy_coefficient(su: &DeviceParams, slot_length: f64) -> f64 {
    su.kappa * su.cycles_per_mb.powi(3) / (slot_length * slot_length)
}
