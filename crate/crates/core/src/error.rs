use std::fmt;

/// Errors shared across the solver library.
#[derive(Debug)]
pub enum Error {
    /// A labeling, coefficient vector, or mask does not match the variable count.
    Dimension { expected: usize, got: usize },
    /// An energy violates its construction invariants (bad index, duplicate
    /// edge, negative or non-finite weight).
    InvalidEnergy(String),
    /// An operation would produce a non-submodular energy, e.g. a pairwise
    /// offset below `-min C_ij`.
    Submodularity(String),
    /// A constraint or constraint set violates its invariants.
    InvalidConstraint(String),
    /// A multiplier lies outside the search box.
    OutOfBox(String),
    /// A ratio statistic was requested on the all-zero labeling.
    UndefinedStatistic(String),
    /// The master program was solved with no collected planes.
    EmptyPlaneSet,
    /// Exhaustive enumeration was requested above the configured cap.
    EnumerationCap { vars: usize, cap: usize },
    /// The internal linear-program solver failed.
    Lp(String),
    Io(std::io::Error),
    /// A text or image input could not be parsed.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidEnergy(msg) => write!(f, "invalid energy: {msg}"),
            Error::Submodularity(msg) => write!(f, "submodularity violated: {msg}"),
            Error::InvalidConstraint(msg) => write!(f, "invalid constraint: {msg}"),
            Error::OutOfBox(msg) => write!(f, "multiplier outside search box: {msg}"),
            Error::UndefinedStatistic(msg) => {
                write!(f, "statistic undefined on the all-zero labeling: {msg}")
            }
            Error::EmptyPlaneSet => write!(
                f,
                "master program needs at least one plane; seed with an oracle call first"
            ),
            Error::EnumerationCap { vars, cap } => {
                write!(f, "{vars} variables exceed the enumeration cap of {cap}")
            }
            Error::Lp(msg) => write!(f, "linear program: {msg}"),
            Error::Io(err) => write!(f, "io: {err}"),
            Error::Format(msg) => write!(f, "format: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
