use thiserror::Error;

/// Failure modes shared by every layer of the lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `x + kα` sits within the enclosure radius of an integer for some `k`,
    /// even at the highest precision allowed.
    #[error("floor of x + {k}α is undecidable at {bits} bits")]
    UndecidableFloor { k: i64, bits: u32 },

    /// A comparison between two enclosures could not be decided.
    #[error("comparison undecidable at {bits} bits: {what}")]
    Undecidable { what: &'static str, bits: u32 },

    /// The point lies (numerically) on the boundary of gap `index`.
    #[error("point is on the boundary of gap I_{index}")]
    OnBoundary { index: usize },

    /// The modulation table does not reach down to the requested parameter.
    #[error("t = {t:e} is below the last control point {t_min:e}; extend the control table")]
    DepthExceeded { t: f64, t_min: f64 },

    #[error("orbit is not a cycle of the base map: {0}")]
    NotPeriodic(String),

    #[error("invalid rotation number: {0}")]
    InvalidAlpha(String),

    #[error("operation requires an irrational rotation number, got the rational literal {0}")]
    RationalAlpha(String),

    #[error("requested {requested} exceeds the configured cap {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A cocycle generator could not be evaluated because its argument could not be located.
    #[error("cocycle evaluation undecidable: {0}")]
    EvaluationUndecidable(Box<Error>),
}

impl Error {
    /// Errors that may disappear when the computation is retried with more bits.
    pub fn is_precision_limited(&self) -> bool {
        matches!(
            self,
            Error::UndecidableFloor { .. } | Error::Undecidable { .. } | Error::OnBoundary { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
