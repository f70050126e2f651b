//! Equilibrium computation: best-response iteration, projected-gradient
//! learning, equilibrium verification and local stability.

mod dynamics;
mod nash;
mod stability;

pub use dynamics::{
    best_response_map, finite_difference_gradient, initial_prices, iteration_bound_check,
    projected_gradient, solve, solve_cig, solve_icig,
};
pub use nash::{verify_nash, Deviation, DeviationGrid, NashCheck};
pub use stability::{jacobian_stability, ClampRegime, Eigenvalue, StabilityReport};

use std::fmt;

use crate::error::{Error, Result};
use crate::game::{StrategyProfile, UtilityReport};
use crate::scenario::ActiveSet;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_PROBE_DELTA: f64 = 1e-5;
pub const DEFAULT_LEARNING_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// Complete information: SUs play exact best responses.
    #[default]
    Cig,
    /// Incomplete information: SUs probe their own sales and step along the
    /// estimated gradient.
    Icig,
}

impl SolverMode {
    pub fn name(self) -> &'static str {
        match self {
            SolverMode::Cig => "cig",
            SolverMode::Icig => "icig",
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialPrices {
    /// Middle of each SU's useful price range, opponents at their upper bounds.
    #[default]
    Midpoint,
    /// Explicit prices aligned with the active set.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Every SU responds to the previous iterate.
    #[default]
    Jacobi,
    /// SUs respond in index order to the freshest prices.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LearningRates {
    Uniform(f64),
    /// One rate per candidate SU, indexed like `Scenario::sus`.
    PerSu(Vec<f64>),
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates::Uniform(DEFAULT_LEARNING_RATE)
    }
}

impl LearningRates {
    /// Rate of the SU with canonical index `index`.
    pub fn rate(&self, index: usize) -> Option<f64> {
        match self {
            LearningRates::Uniform(a) => Some(*a),
            LearningRates::PerSu(rates) => rates.get(index).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub initial_prices: InitialPrices,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Half-width of the ICIG price probes (J/Mb).
    pub probe_delta: f64,
    pub learning_rates: LearningRates,
    pub update_order: UpdateOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::Cig,
            initial_prices: InitialPrices::Midpoint,
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            probe_delta: DEFAULT_PROBE_DELTA,
            learning_rates: LearningRates::default(),
            update_order: UpdateOrder::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn cig() -> Self {
        Self::default()
    }

    pub fn icig() -> Self {
        Self {
            mode: SolverMode::Icig,
            ..Self::default()
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("solver.epsilon", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid(
                "solver.max_iterations",
                "must be at least 1",
            ));
        }
        if !(self.probe_delta > 0.0 && self.probe_delta.is_finite()) {
            return Err(Error::invalid("solver.probe_delta", "must be positive"));
        }
        // A zero rate is accepted: it freezes that SU's price.
        let bad_rate = |a: &f64| !(*a >= 0.0 && a.is_finite());
        match &self.learning_rates {
            LearningRates::Uniform(a) if bad_rate(a) => {
                return Err(Error::invalid(
                    "solver.learning_rate",
                    "must be non-negative",
                ));
            }
            LearningRates::PerSu(rates) if rates.iter().any(bad_rate) => {
                return Err(Error::invalid(
                    "solver.learning_rates",
                    "must be non-negative",
                ));
            }
            _ => {}
        }
        if let InitialPrices::Fixed(q) = &self.initial_prices {
            if q.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
                return Err(Error::invalid(
                    "solver.initial_prices",
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 0 for the initial state.
    pub iteration: usize,
    pub prices: Vec<f64>,
    pub alloc: Vec<f64>,
    pub u_su: Vec<f64>,
    pub u_du: f64,
    /// The per-SU gradient used by the stopping rule.
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `|grad[i]| <= eps |grad[i-1]|` for every SU.
    GradientRatio,
    /// `|q[i] - q[i-1]| <= eps max(1, q[i-1])` for every SU (CIG).
    PriceChange,
    /// `|max(0, q + grad) - q| <= eps max(1, q)` for every SU (ICIG).
    GradientMapping,
    IterationLimit,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::GradientRatio => "gradient_ratio",
            StopReason::PriceChange => "price_change",
            StopReason::GradientMapping => "gradient_mapping",
            StopReason::IterationLimit => "iteration_limit",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Both stopping tests, reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// First iteration at which the gradient ratio test held.
    pub ratio_test_iteration: Option<usize>,
    /// First iteration at which the residual test held.
    pub residual_test_iteration: Option<usize>,
    /// Largest `|grad|` at the final iterate.
    pub final_gradient_norm: f64,
    /// Largest scaled residual at the final iterate.
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub mode: SolverMode,
    pub active: ActiveSet,
    pub initial: IterationRecord,
    /// One record per iteration; `trajectory.len() == iterations_used`.
    pub trajectory: Vec<IterationRecord>,
    pub final_profile: StrategyProfile,
    pub utilities: UtilityReport,
    pub iterations_used: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub diagnostics: Diagnostics,
    /// Only for two active SUs.
    pub spectral_radius: Option<f64>,
}

impl EquilibriumResult {
    pub fn prices(&self) -> &[f64] {
        &self.final_profile.prices
    }

    pub fn alloc(&self) -> &[f64] {
        &self.final_profile.alloc
    }
}
