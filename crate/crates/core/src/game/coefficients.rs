use std::f64::consts::LN_2;

use crate::energy::{
    channel_gain, compute_energy_coefficient, du_energy_per_mb, frequency_limited_capacity,
    power_limited_capacity, slot_share, DeviceId,
};
use crate::error::{Error, Result};
use crate::scenario::{ActiveSet, Scenario};

/// Allocations (Mb) below this count as zero.
pub const ZERO_ALLOCATION: f64 = 1e-9;

/// Per-SU constants of the DU best response for one price profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SuCoefficients {
    /// Canonical index into [`Scenario::sus`].
    pub index: usize,
    pub id: DeviceId,
    /// DU-to-SU channel gain.
    pub gain: f64,
    /// `H2 / g - v + 1`.
    pub curvature: f64,
    /// Unclamped DU demand at zero own price.
    pub alpha: f64,
    /// Demand slope with respect to own price.
    pub beta: f64,
    /// Power-limited cap, `min(L_0, log2(P g / sigma^2 + 1) B T / |N|)`.
    pub power_cap: f64,
    /// CPU-limited cap, `T f^max / C - L_n`.
    pub cpu_cap: f64,
    /// `min(power_cap, cpu_cap)`.
    pub cap: f64,
    /// `kappa C^3 / T^2`.
    pub compute_coeff: f64,
    /// Own workload `L_n`.
    pub workload: f64,
    /// Receiver energy for one slot share, `p_rec T / |N|`.
    pub receive_energy: f64,
}

impl SuCoefficients {
    /// Whether the SU can accept any load at all.
    pub fn capacity_feasible(&self) -> bool {
        self.cap > ZERO_ALLOCATION
    }

    /// Prices outside this interval cannot improve the SU's utility.
    pub fn price_range(&self) -> (f64, f64) {
        let cap = self.cap.max(0.0);
        ((self.alpha - cap) / self.beta, self.alpha / self.beta)
    }

    /// DU demand at own price `q`, clamped to `[0, cap]`.
    pub fn demand(&self, price: f64) -> f64 {
        clamp(self.alpha - self.beta * price, 0.0, self.cap.max(0.0))
    }
}

/// Snapshot of every derived constant for one active set and price profile.
///
/// `a`, `h1`, `h2` and `k` depend on the active-set size, `alpha` on the
/// opponents' prices; rebuild the snapshot whenever either changes.
#[derive(Debug, Clone, PartialEq)]
pub struct GameCoefficients {
    /// DU energy saved per offloaded Mb.
    pub a: f64,
    pub h1: f64,
    pub h2: f64,
    /// `sum_n 1 / curvature_n`.
    pub k: f64,
    pub substitutability: f64,
    pub active_count: usize,
    /// `T / |N|`.
    pub slot_share: f64,
    /// `B T / |N|`.
    pub slot_capacity: f64,
    pub noise_power: f64,
    pub du_workload: f64,
    pub su: Vec<SuCoefficients>,
}

impl GameCoefficients {
    pub fn alphas(&self) -> Vec<f64> {
        self.su.iter().map(|c| c.alpha).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.su.iter().map(|c| c.beta).collect()
    }

    pub fn caps(&self) -> Vec<f64> {
        self.su.iter().map(|c| c.cap).collect()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.su.iter().map(|c| c.gain).collect()
    }

    /// `d alpha_n / d q_k` for `k != n`; zero on the diagonal.
    pub fn cross_price_sensitivity(&self, n: usize, k: usize) -> f64 {
        if n == k {
            return 0.0;
        }
        let v = self.substitutability;
        v / (self.su[k].curvature * self.su[n].curvature * (v * self.k + 1.0))
    }
}

/// `[x]_lo^hi`; callers guarantee `lo <= hi`.
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi, "empty clamp interval [{lo}, {hi}]");
    x.min(hi).max(lo)
}

/// Price-independent part of the game on a fixed active set.
#[derive(Debug, Clone)]
pub struct Game<'a> {
    scenario: &'a Scenario,
    active: ActiveSet,
    template: GameCoefficients,
}

impl<'a> Game<'a> {
    pub fn new(scenario: &'a Scenario, active: ActiveSet) -> Result<Self> {
        active.check_within(scenario)?;
        let sys = &scenario.system;
        let du = &scenario.du;
        let count = active.len();
        let v = sys.substitutability;
        let t_n = slot_share(count, sys.slot_length)?;
        let slot_capacity = sys.slot_capacity(count);
        let log_rate = LN_2 / slot_capacity;
        let h1 = log_rate * sys.noise_power * t_n;
        let h2 = log_rate * log_rate * sys.noise_power * t_n;

        let mut su = Vec::with_capacity(count);
        for index in active.iter() {
            let dev = &scenario.sus[index];
            let gain = channel_gain(&du.position, &dev.position, sys)?;
            let curvature = h2 / gain - v + 1.0;
            if !(curvature > 0.0) {
                return Err(Error::SubstitutabilitySingularity {
                    su: dev.id,
                    value: curvature,
                });
            }
            let power_cap = du.workload.min(power_limited_capacity(gain, sys, count));
            let cpu_cap = frequency_limited_capacity(dev, sys.slot_length);
            su.push(SuCoefficients {
                index,
                id: dev.id,
                gain,
                curvature,
                alpha: 0.0,
                beta: 0.0,
                power_cap,
                cpu_cap,
                cap: power_cap.min(cpu_cap),
                compute_coeff: compute_energy_coefficient(dev, sys.slot_length),
                workload: dev.workload,
                receive_energy: dev.p_rec * t_n,
            });
        }
        let k: f64 = su.iter().map(|c| 1.0 / c.curvature).sum();
        for c in &mut su {
            c.beta = (v * (k - 1.0 / c.curvature) + 1.0) / (c.curvature * (v * k + 1.0));
        }
        let template = GameCoefficients {
            a: du_energy_per_mb(du),
            h1,
            h2,
            k,
            substitutability: v,
            active_count: count,
            slot_share: t_n,
            slot_capacity,
            noise_power: sys.noise_power,
            du_workload: du.workload,
            su,
        };
        Ok(Self {
            scenario,
            active,
            template,
        })
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Coefficients for the given price profile (aligned with the active set).
    pub fn coefficients(&self, prices: &[f64]) -> Result<GameCoefficients> {
        self.check_prices(prices)?;
        let mut out = self.template.clone();
        let v = out.substitutability;
        let k = out.k;
        let cross: Vec<f64> = out
            .su
            .iter()
            .zip(prices)
            .map(|(c, &q)| (out.h1 / c.gain + q) / c.curvature)
            .collect();
        let cross_total: f64 = cross.iter().sum();
        for (n, c) in out.su.iter_mut().enumerate() {
            let own_share = v * (k - 1.0 / c.curvature) + 1.0;
            let others = cross_total - cross[n];
            let numerator = out.a - out.h1 / c.gain * own_share + v * others;
            c.alpha = numerator / (c.curvature * (v * k + 1.0));
        }
        Ok(out)
    }

    /// Joint fixed point where every SU prices at its own upper bound
    /// `alpha_n / beta_n` given the others at theirs.
    ///
    /// `alpha` is affine in the opponents' prices, so this is the linear system
    /// `beta_n q_n - sum_k dalpha_n/dq_k q_k = alpha_n(0)`, which is strictly
    /// diagonally dominant.
    pub fn upper_price_bounds(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let base = self.coefficients(&vec![0.0; n])?;
        let matrix = (0..n)
            .map(|row| {
                (0..n)
                    .map(|col| {
                        if row == col {
                            base.su[row].beta
                        } else {
                            -base.cross_price_sensitivity(row, col)
                        }
                    })
                    .collect()
            })
            .collect();
        solve_dominant(matrix, base.alphas())
    }

    fn check_prices(&self, prices: &[f64]) -> Result<()> {
        if prices.len() != self.len() {
            return Err(Error::invalid(
                "prices",
                format!("expected {} prices, got {}", self.len(), prices.len()),
            ));
        }
        if let Some(q) = prices.iter().find(|q| !(**q >= 0.0) || !q.is_finite()) {
            return Err(Error::ConstraintViolation {
                constraint: crate::error::Constraint::PriceNonNegative,
                detail: format!("price {q}"),
            });
        }
        Ok(())
    }
}

/// Coefficients for `active` at `prices`.
pub fn compute_coefficients(
    scenario: &Scenario,
    active: &ActiveSet,
    prices: &[f64],
) -> Result<GameCoefficients> {
    Game::new(scenario, active.clone())?.coefficients(prices)
}

/// Why an SU cannot take part in the game on the given candidate set.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFault {
    Singular { curvature: f64 },
    NoCapacity { cap: f64 },
}

/// Screens every candidate for coefficient feasibility with `|N| = candidates.len()`.
pub fn coefficient_faults(
    scenario: &Scenario,
    candidates: &ActiveSet,
) -> Result<Vec<(usize, CoefficientFault)>> {
    candidates.check_within(scenario)?;
    let sys = &scenario.system;
    let count = candidates.len();
    let t_n = slot_share(count, sys.slot_length)?;
    let log_rate = LN_2 / sys.slot_capacity(count);
    let h2 = log_rate * log_rate * sys.noise_power * t_n;
    let mut faults = Vec::new();
    for index in candidates.iter() {
        let dev = &scenario.sus[index];
        let gain = channel_gain(&scenario.du.position, &dev.position, sys)?;
        let curvature = h2 / gain - sys.substitutability + 1.0;
        let cap = scenario
            .du
            .workload
            .min(power_limited_capacity(gain, sys, count))
            .min(frequency_limited_capacity(dev, sys.slot_length));
        if !(curvature > 0.0) {
            faults.push((index, CoefficientFault::Singular { curvature }));
        } else if !(cap > ZERO_ALLOCATION) {
            faults.push((index, CoefficientFault::NoCapacity { cap }));
        }
    }
    Ok(faults)
}

/// Gaussian elimination without pivoting; only for diagonally dominant systems.
fn solve_dominant(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = m[col][col];
        if !(pivot.abs() > 0.0) {
            return Err(Error::Internal("singular price-bound system".into()));
        }
        for row in col + 1..n {
            let factor = m[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            let (upper, lower) = m.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|j| m[row][j] * x[j]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Ok(x)
}
