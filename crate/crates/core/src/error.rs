use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant maps onto one of the CLI exit classes through [`Error::class`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probabilities sum to {sum}, expected 1 (tolerance 1e-12)")]
    NonNormalized { sum: f64 },
    #[error("atom {atom} appears more than once")]
    DuplicateAtom { atom: f64 },
    #[error("negative probability {prob} at position {index}")]
    NegativeProb { index: usize, prob: f64 },
    #[error("atoms and probabilities have lengths {atoms} and {probs}")]
    LengthMismatch { atoms: usize, probs: usize },
    #[error("a law needs at least one atom")]
    EmptyLaw,
    #[error("non-finite value {value} in {what}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("{count} configurations exceed the enumeration cap {cap}")]
    CapExceeded { count: u128, cap: u64 },
    #[error("coordinate {coord} out of range for a space with {n} coordinates")]
    CoordinateOutOfRange { coord: usize, n: usize },
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variance {var} is too small for a ratio bound")]
    ZeroVariance { var: f64 },
    #[error("law has a single atom; the centred space is trivial")]
    DegenerateLaw,
    #[error("no admissible q: eta_q^2 < 1 - eps just above q = 2")]
    NoAdmissibleQ,
    #[error("eta curve is not nonincreasing on (2, {q_bar}] (violation near q = {at})")]
    NonMonotoneCurve { q_bar: f64, at: f64 },
    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },
    #[error("no beta reaches sigma^2 = {target} (supremum {sup})")]
    NoRoot { target: f64, sup: f64 },
    #[error("test-function support of radius {needed} escapes the lattice box of radius {box_radius}")]
    SupportEscape { needed: f64, box_radius: usize },
    #[error("test function takes negative values; only the bound is available")]
    SignedTestFunction,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Coarse error classes used for exit codes and machine-readable reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    NumericCap,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::CapExceeded { .. } => ErrorClass::NumericCap,
            _ => ErrorClass::Config,
        }
    }

    /// Short stable identifier, used as the `kind` field of error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonNormalized { .. } => "NonNormalized",
            Error::DuplicateAtom { .. } => "DuplicateAtom",
            Error::NegativeProb { .. } => "NegativeProb",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::EmptyLaw => "EmptyLaw",
            Error::NonFinite { .. } => "NonFinite",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::CoordinateOutOfRange { .. } => "CoordinateOutOfRange",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::DegenerateLaw => "DegenerateLaw",
            Error::NoAdmissibleQ => "NoAdmissibleQ",
            Error::NonMonotoneCurve { .. } => "NonMonotoneCurve",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NoRoot { .. } => "NoRoot",
            Error::SupportEscape { .. } => "SupportEscape",
            Error::SignedTestFunction => "SignedTestFunction",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
