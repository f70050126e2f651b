use std::fmt;

use crate::energy::DeviceId;
use crate::selection::SelectionOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Constraints of the DU and SU optimization problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `0 <= l_n <= L_0` for every SU.
    AllocationRange,
    /// `sum_n l_n <= L_0`.
    TotalOffload,
    /// Required DU transmit power stays under the cap `P`.
    TxPower,
    /// `q_n >= 0`.
    PriceNonNegative,
    /// `C_n (L_n + l_n) / T <= f_n^max`.
    CpuFrequency,
}

impl Constraint {
    pub const ALL: [Constraint; 5] = [
        Constraint::AllocationRange,
        Constraint::TotalOffload,
        Constraint::TxPower,
        Constraint::PriceNonNegative,
        Constraint::CpuFrequency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::AllocationRange => "allocation_range",
            Constraint::TotalOffload => "total_offload",
            Constraint::TxPower => "tx_power",
            Constraint::PriceNonNegative => "price_nonnegative",
            Constraint::CpuFrequency => "cpu_frequency",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Broad failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: scenario text, parameters, unsupported requests.
    Validation,
    /// Numerical/solver failure on a valid input.
    Solver,
    /// Filesystem or stream failure.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{device}: load needs {required_hz:.6e} Hz but f_max is {f_max_hz:.6e} Hz")]
    FrequencyInfeasible {
        device: DeviceId,
        required_hz: f64,
        f_max_hz: f64,
    },

    #[error("degenerate geometry: transmitter and receiver are {distance:.3e} m apart")]
    DegenerateGeometry { distance: f64 },

    #[error("active SU set is empty")]
    EmptyActiveSet,

    #[error("offloaded {offloaded} Mb exceeds the DU workload of {workload} Mb")]
    OverOffload { offloaded: f64, workload: f64 },

    #[error("constraint {constraint} violated: {detail}")]
    ConstraintViolation {
        constraint: Constraint,
        detail: String,
    },

    #[error("substitutability singularity for {su}: H2/g - v + 1 = {value:.3e} (model undefined)")]
    SubstitutabilitySingularity { su: DeviceId, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("grid of {points:.3e} points exceeds the {limit:.0e} limit; coarsen the step")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("selection aborted in round {round}: {source}")]
    SelectionAborted {
        round: usize,
        #[source]
        source: Box<Error>,
        log: Box<SelectionOutcome>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io(_) => ErrorCategory::Io,
            Error::Internal(_) | Error::SelectionAborted { .. } => ErrorCategory::Solver,
            _ => ErrorCategory::Validation,
        }
    }
}
