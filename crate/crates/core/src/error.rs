use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rational rotation number: {0} has a terminating continued fraction within depth {1}")]
    RationalRotation(f64, usize),
    #[error("rotation number must lie in (0, 1), got {0}")]
    RotationOutOfRange(f64),
    #[error("gaps exhaust circle: total gap length {0} >= 1")]
    GapsExhaustCircle(f64),
    #[error("invalid gap schedule: {0}")]
    InvalidSchedule(String),
    #[error("depth {depth} exceeds schedule range {range}")]
    DepthExceedsSchedule { depth: usize, range: usize },
    #[error("point not on transversal: {0}")]
    NotOnTransversal(f64),
    #[error("masses do not sum to 1 (sum = {0})")]
    MassesDoNotSumToOne(f64),
    #[error("non-positive mass {0}")]
    NonPositiveMass(f64),
    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("top degree: cannot differentiate a {0}-form on T^{0}")]
    TopDegree(usize),
    #[error("degree overflow: {0} + {1} > {2}")]
    DegreeOverflow(usize, usize, usize),
    #[error("expected a top-degree form, got degree {0} on T^{1}")]
    NotTopDegree(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not a cover: point {0:?} is not covered")]
    NotACover(Vec<f64>),
    #[error("dictionary mismatch: {0}")]
    DictionaryMismatch(String),
    #[error("normalize first: solenoid mass is {0}, expected 1")]
    NotNormalized(f64),
    #[error("unique-ergodicity diagnostic failed: Birkhoff spread {spread} > {tolerance}")]
    NotUniquelyErgodic { spread: f64, tolerance: f64 },
    #[error("null class")]
    NullClass,
    #[error("excluded value {0}")]
    ExcludedValue(f64),
    #[error("not a regular value: {value} (min |grad F| = {min_grad} < {threshold})")]
    NotRegular { value: f64, min_grad: f64, threshold: f64 },
    #[error("empty range")]
    EmptyRange,
    #[error("cannot chunk: solenoid has nontrivial holonomy")]
    CannotChunk,
    #[error("budget infeasible: {0}")]
    BudgetInfeasible(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
