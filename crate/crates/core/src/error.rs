use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the frame toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator data is malformed: {0}")]
    Malformed(String),

    #[error("unsupported group preset: {0}")]
    UnsupportedPreset(String),

    #[error("table is not a group: {law} fails at {witness:?}")]
    NotAGroup { law: GroupLaw, witness: Vec<usize> },

    #[error("point {0} is not in the G-space")]
    UnknownPoint(usize),

    #[error("group mismatch: order {left} vs order {right}")]
    GroupMismatch { left: usize, right: usize },

    #[error("representation is not a unitary homomorphism: {0}")]
    NotARepresentation(String),

    #[error("orbit sum deviates from a multiple of the identity by {residual:e}")]
    NotProportionalToIdentity { residual: f64 },

    #[error("seed vector is not cyclic: orbit spans {rank} of {dim} dimensions")]
    NotCyclic { rank: usize, dim: usize },

    #[error("frame is not ideal: {0}")]
    FrameNotIdeal(String),

    #[error("frames are not ideal coherent-state frames: {0}")]
    FramesNotIdealCoherent(String),

    #[error("invalid phase coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("localization set is empty")]
    EmptySet,

    #[error("invariant violated: {name} (residual {residual:e})")]
    InvariantViolation { name: String, residual: f64 },
}

/// The group axiom that a Cayley table violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupLaw {
    Closure,
    Identity,
    Inverse,
    Associativity,
}

impl std::fmt::Display for GroupLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroupLaw::Closure => "closure",
            GroupLaw::Identity => "identity",
            GroupLaw::Inverse => "inverse",
            GroupLaw::Associativity => "associativity",
        };
        f.write_str(s)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
