//! Game utilities, derived coefficients and closed-form best responses.

mod coefficients;
mod response;
mod utility;

pub use coefficients::{
    clamp, coefficient_faults, compute_coefficients, CoefficientFault, Game, GameCoefficients,
    SuCoefficients, ZERO_ALLOCATION,
};
pub use response::{
    du_best_response, interior_price_grid, pricing_curvature, pricing_gradient, stationary_price,
    su_best_response_price, verify_concavity, ConcavityReport,
};
pub use utility::{
    du_utility_exact, du_utility_quadratic, maclaurin_remainder_bound, su_pricing_objective,
    su_pricing_objective_unclamped, su_utility, substitution_penalty, utility_report,
    EnergyBreakdown, SuEnergy, UtilityReport,
};

pub(crate) use response::discriminant;
pub(crate) use utility::{cubic_pricing_value, du_quadratic_value};

/// DU purchases and SU prices, both aligned with the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    /// Mb bought from each SU.
    pub alloc: Vec<f64>,
    /// Price per Mb posted by each SU.
    pub prices: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(alloc: Vec<f64>, prices: Vec<f64>) -> Self {
        debug_assert_eq!(alloc.len(), prices.len());
        Self { alloc, prices }
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn total_alloc(&self) -> f64 {
        self.alloc.iter().sum()
    }
}
