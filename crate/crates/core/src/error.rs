use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Whether an error means the input is malformed or that a well-formed input
/// fails a mathematical requirement (not excessive, not intertwining, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Invalid,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state space is empty")]
    EmptySpace,
    #[error("state space has {count} states, above the cap of {cap}")]
    TooManyStates { count: usize, cap: usize },
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error("weight of state {index} is {value}; weights must be finite and positive")]
    InvalidMeasure { index: usize, value: f64 },
    #[error("conductance c({x},{y}) = {value} is invalid: {reason}")]
    InvalidConductance {
        x: usize,
        y: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("killing rate of state {index} is {value}; rates must be finite and nonnegative")]
    InvalidKilling { index: usize, value: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("value at state {index} is {value}; expected finite and positive")]
    NonPositive { index: usize, value: f64 },
    #[error("map is not a bijection: state {0} is hit twice or out of range")]
    NotBijective(usize),
    #[error("state spaces do not match: {0}")]
    SpaceMismatch(&'static str),
    #[error(
        "relabeling does not preserve measure at state {index}: {source_weight} vs {target_weight}"
    )]
    NotMeasurePreserving {
        index: usize,
        source_weight: f64,
        target_weight: f64,
    },
    #[error("step scaling constant {index} is {value}; constants must be finite and positive")]
    InvalidStepConstant { index: usize, value: f64 },
    #[error("function is not excessive: relative (Lh)({index}) = {value:e}")]
    NotExcessive { index: usize, value: f64 },
    #[error("state subset is not invariant: c({inside},{outside}) > 0")]
    NotInvariant { inside: usize, outside: usize },
    #[error("order isomorphism does not intertwine the semigroups: residual {residual:e} > {tolerance:e}")]
    NotIntertwining { residual: f64, tolerance: f64 },
    #[error("order isomorphism is not unitary: relative measure defect {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("source form is reducible ({0} components)")]
    Reducible(usize),
    #[error("norm ratio is not constant on the component of state {state}: spread {spread:e}")]
    NonConstantRatio { state: usize, spread: f64 },
    #[error("transformation does not map component {0} onto a component of the target form")]
    ComponentMismatch(usize),
    #[error(
        "h-transformed form does not push forward onto the target form: residual {residual:e}"
    )]
    PushforwardMismatch { residual: f64 },
    #[error("factorization does not reproduce the order isomorphism: residual {residual:e}")]
    ReconstructionFailed { residual: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotExcessive { .. }
            | Error::NotInvariant { .. }
            | Error::NotIntertwining { .. }
            | Error::NotUnitary { .. }
            | Error::Reducible(_)
            | Error::NonConstantRatio { .. }
            | Error::ComponentMismatch(_)
            | Error::PushforwardMismatch { .. }
            | Error::ReconstructionFailed { .. } => ErrorKind::Rejected,
            _ => ErrorKind::Invalid,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
