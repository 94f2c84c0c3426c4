use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Stable error classes. The discriminants are part of the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i32)]
pub enum ErrorCode {
    NegativeWeight = 1,
    WeightSum = 2,
    OffLattice = 3,
    EmptySet = 4,
    InvalidArgument = 5,
    UnboundedEval = 6,
    UnboundedFunction = 7,
    StateBudgetExceeded = 8,
    UnsupportedEvent = 9,
    PolicyGap = 10,
    EnumerationBudgetExceeded = 11,
    BadInterval = 12,
    TruncationTooSmall = 13,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("generator {generator}: atom {atom} has negative weight {weight}")]
    NegativeWeight {
        generator: usize,
        atom: usize,
        weight: f64,
    },
    #[error("generator {generator}: weights sum to {sum}, expected 1 within 1e-12")]
    WeightSum { generator: usize, sum: f64 },
    #[error("generator {generator}: point {point} is not a multiple of the lattice step {step}")]
    OffLattice {
        generator: usize,
        point: f64,
        step: f64,
    },
    #[error("ambiguity set has no generators")]
    EmptySet,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("function evaluation at {point} is not finite")]
    UnboundedEval { point: f64 },
    #[error("function {0} is unbounded; a bounded test function is required here")]
    UnboundedFunction(String),
    #[error("state budget exceeded: {needed} level-states needed, budget is {budget}")]
    StateBudgetExceeded { needed: u64, budget: u64 },
    #[error("unsupported event: {0}")]
    UnsupportedEvent(String),
    #[error("policy has no generator for reachable state {coord} (flag {flag}) before step {step}")]
    PolicyGap { step: usize, coord: i64, flag: bool },
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    EnumerationBudgetExceeded { needed: f64, budget: u64 },
    #[error("bad interval [{lower}, {upper}]")]
    BadInterval { lower: f64, upper: f64 },
    #[error("truncation {truncation} too small: {reason}")]
    TruncationTooSmall { truncation: u64, reason: String },
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::NegativeWeight { .. } => ErrorCode::NegativeWeight,
            Error::WeightSum { .. } => ErrorCode::WeightSum,
            Error::OffLattice { .. } => ErrorCode::OffLattice,
            Error::EmptySet => ErrorCode::EmptySet,
            Error::InvalidArgument(_) => ErrorCode::InvalidArgument,
            Error::UnboundedEval { .. } => ErrorCode::UnboundedEval,
            Error::UnboundedFunction(_) => ErrorCode::UnboundedFunction,
            Error::StateBudgetExceeded { .. } => ErrorCode::StateBudgetExceeded,
            Error::UnsupportedEvent(_) => ErrorCode::UnsupportedEvent,
            Error::PolicyGap { .. } => ErrorCode::PolicyGap,
            Error::EnumerationBudgetExceeded { .. } => ErrorCode::EnumerationBudgetExceeded,
            Error::BadInterval { .. } => ErrorCode::BadInterval,
            Error::TruncationTooSmall { .. } => ErrorCode::TruncationTooSmall,
        }
    }

    /// Budget errors are reported separately from validation errors by the CLI.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::StateBudgetExceeded { .. } | Error::EnumerationBudgetExceeded { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
