use alloc::string::String;
use core::fmt;

/// Errors raised by the analysis routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A variable name occurs twice in a space.
    DuplicateVariable(String),
    /// A value label occurs twice within one domain.
    DuplicateValue { variable: String, value: String },
    /// A domain with fewer than two values.
    DomainTooSmall(String),
    /// A name that is not part of the variable space.
    UnknownVariable(String),
    /// A value label not found in the named variable's domain.
    UnknownValue { variable: String, value: String },
    /// A variable index outside the space.
    VariableOutOfRange(usize),
    /// A value index outside the variable's domain.
    ValueOutOfRange { variable: usize, value: usize },
    /// A full assignment was required but this variable was left unbound.
    Unbound(usize),
    /// A table whose length does not match its scope.
    LengthMismatch { expected: usize, found: usize },
    /// A table entry that is NaN or infinite.
    NonFinite,
    /// Two factor scopes where one contains the other.
    NestedFactorScopes,
    /// Scopes that were required to be disjoint share a variable.
    Overlap,
    /// Scopes that were required to cover the space do not.
    NotCovering,
    /// An argument outside its admissible range.
    InvalidArgument(&'static str),
    /// Two objects defined over different variable spaces.
    SpaceMismatch,
    /// A state count above the configured limit.
    GuardExceeded {
        what: &'static str,
        size: u64,
        limit: u64,
    },
    /// A decomposition that does not reproduce the utility.
    ResidualTooLarge { residual: f64, threshold: f64 },
    /// A conditional probability row or distribution that is not normalized.
    NotNormalized,
    /// A probability outside [0, 1].
    InvalidProbability,
    /// The parent relation of a Bayesian network contains a cycle.
    Cyclic,
    /// Missing or repeated conditional probability table for a variable.
    MissingCpt(usize),
    /// Conditioning on evidence that has probability zero.
    ZeroProbabilityEvidence,
    /// Clique order without the running-intersection property.
    RunningIntersection(usize),
    /// Duplicate action label.
    DuplicateLabel(String),
}

impl Error {
    /// True for errors raised by a size guard rather than by malformed input.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::GuardExceeded { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DuplicateVariable(name) => write!(f, "duplicate variable `{name}`"),
            Error::DuplicateValue { variable, value } => {
                write!(f, "duplicate value `{value}` in domain of `{variable}`")
            }
            Error::DomainTooSmall(name) => {
                write!(f, "variable `{name}` needs at least two domain values")
            }
            Error::UnknownVariable(name) => write!(f, "unknown variable `{name}`"),
            Error::UnknownValue { variable, value } => {
                write!(f, "unknown value `{value}` for variable `{variable}`")
            }
            Error::VariableOutOfRange(v) => write!(f, "variable index {v} out of range"),
            Error::ValueOutOfRange { variable, value } => {
                write!(
                    f,
                    "value index {value} out of range for variable {variable}"
                )
            }
            Error::Unbound(v) => write!(f, "variable {v} is not bound"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "table has {found} entries, expected {expected}")
            }
            Error::NonFinite => f.write_str("table contains a non-finite value"),
            Error::NestedFactorScopes => {
                f.write_str("a factor scope is contained in another factor scope")
            }
            Error::Overlap => f.write_str("scopes are not pairwise disjoint"),
            Error::NotCovering => f.write_str("scopes do not cover every variable"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::SpaceMismatch => {
                f.write_str("objects are defined over different variable spaces")
            }
            Error::GuardExceeded { what, size, limit } => {
                write!(f, "{what}: size {size} exceeds limit {limit}")
            }
            Error::ResidualTooLarge {
                residual,
                threshold,
            } => write!(
                f,
                "decomposition residual {residual:e} exceeds tolerance {threshold:e}"
            ),
            Error::NotNormalized => f.write_str("probabilities do not sum to one"),
            Error::InvalidProbability => f.write_str("probability outside [0, 1]"),
            Error::Cyclic => f.write_str("parent relation is cyclic"),
            Error::MissingCpt(v) => {
                write!(
                    f,
                    "variable {v} needs exactly one conditional probability table"
                )
            }
            Error::ZeroProbabilityEvidence => f.write_str("evidence has probability zero"),
            Error::RunningIntersection(i) => {
                write!(f, "clique {i} violates the running-intersection property")
            }
            Error::DuplicateLabel(label) => write!(f, "duplicate label `{label}`"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
