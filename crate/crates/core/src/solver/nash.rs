use crate::energy::DeviceId;
use crate::error::{Error, Result};
use crate::game::{du_quadratic_value, su_pricing_objective, Game, StrategyProfile};
use crate::scenario::{ActiveSet, Scenario};

/// Unilateral deviations tried by [`verify_nash`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationGrid {
    /// Spacing of SU price deviations (J/Mb).
    pub price_step: f64,
    /// Spacing of DU allocation deviations (Mb).
    pub alloc_step: f64,
    /// Utility gain that counts as a profitable deviation.
    pub tolerance: f64,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        Self {
            price_step: 1e-5,
            alloc_step: 1e-4,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub player: DeviceId,
    /// SU slot for price deviations; the allocation coordinate for the DU.
    pub slot: usize,
    /// The deviating strategy value (price or allocation).
    pub strategy: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NashCheck {
    pub is_nash: bool,
    /// Most profitable deviation found, whether or not above tolerance.
    pub worst: Option<Deviation>,
}

/// Grid check of the equilibrium definition.
///
/// Each SU's payoff is its pricing objective with the DU's best-response
/// purchase substituted. The DU is checked on the quadratic utility one
/// coordinate at a time; the utility is concave on a box, so coordinate-wise
/// optimality is global optimality.
pub fn verify_nash(
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
    grid: &DeviationGrid,
) -> Result<NashCheck> {
    if !(grid.price_step > 0.0 && grid.alloc_step > 0.0) {
        return Err(Error::invalid("deviation_grid", "steps must be positive"));
    }
    let game = Game::new(scenario, active.clone())?;
    let coeffs = game.coefficients(&profile.prices)?;
    if profile.alloc.len() != coeffs.su.len() {
        return Err(Error::invalid(
            "profile",
            "allocation length does not match",
        ));
    }
    let mut worst: Option<Deviation> = None;
    let mut consider = |d: Deviation| {
        if worst.as_ref().is_none_or(|w| d.gain > w.gain) {
            worst = Some(d);
        }
    };

    for (slot, c) in coeffs.su.iter().enumerate() {
        let current = su_pricing_objective(c, profile.prices[slot]);
        let (lo, hi) = c.price_range();
        let lo = lo.max(0.0);
        for x in grid_points(lo, hi, grid.price_step) {
            consider(Deviation {
                player: c.id,
                slot,
                strategy: x,
                gain: su_pricing_objective(c, x) - current,
            });
        }
    }

    let current = du_quadratic_value(&coeffs, &profile.prices, &profile.alloc);
    let mut trial = profile.alloc.clone();
    for (slot, c) in coeffs.su.iter().enumerate() {
        for x in grid_points(0.0, c.cap.max(0.0), grid.alloc_step) {
            trial[slot] = x;
            consider(Deviation {
                player: DeviceId::Du,
                slot,
                strategy: x,
                gain: du_quadratic_value(&coeffs, &profile.prices, &trial) - current,
            });
        }
        trial[slot] = profile.alloc[slot];
    }

    Ok(NashCheck {
        is_nash: worst.as_ref().is_none_or(|w| w.gain <= grid.tolerance),
        worst,
    })
}

/// `lo, lo + step, ...` up to and including `hi`.
fn grid_points(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).floor().max(0.0) as usize;
    (0..=n)
        .map(move |i| lo + i as f64 * step)
        .chain(std::iter::once(hi))
}
