use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("deformation parameter q = {0} must lie in the open interval (-1, 1)")]
    InvalidQ(f64),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("level dimension {requested} exceeds the configured cap {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("{label}: input reaches level {level} but the operator is exact only up to level {guard:?}")]
    GuardViolation {
        label: String,
        level: usize,
        guard: Option<usize>,
    },

    #[error("vectors or operators live on different Fock spaces")]
    SpaceMismatch,

    #[error("letter {letter} is outside the letter dimension {dim}")]
    LetterOutOfRange { letter: usize, dim: usize },

    #[error("word of length {len} exceeds the truncation level {max_level}")]
    WordTooLong { len: usize, max_level: usize },

    #[error("map has operator norm {0} > 1; a contraction is required")]
    NotContraction(f64),

    #[error("Rademacher index {index} needs {needed} spectral atoms, only {atoms} available")]
    ResolutionExhausted {
        index: u32,
        needed: usize,
        atoms: usize,
    },

    #[error("pair partitions need an even size, got {0}")]
    OddSize(usize),

    #[error("vector has norm {0}; a unit vector is required")]
    NotUnit(f64),

    #[error("word {0} lies in the span of powers of the distinguished letter")]
    PureWord(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
