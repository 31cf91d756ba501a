use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unassigned symbol `{0}`")]
    UnassignedSymbol(String),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("sort error: {0}")]
    Sort(String),
    #[error("model does not satisfy the formula")]
    NotAModel,
    #[error("negative slack in `{0}`")]
    NegativeSlack(String),
    #[error("division by zero")]
    DivisorZero,
    #[error("empty interval for `{0}`")]
    EmptyIntersection(String),
    #[error("arrays `{0}` and `{1}` are extensionally equal in the model")]
    NoWitness(String, String),
    #[error("unknown grounded variable `{0}`")]
    UnknownGroundVar(String),
    #[error("formula is unsatisfiable")]
    Unsat,
    #[error("solver error: {0}")]
    Solver(String),
    #[error("solver rejected soft constraints: {0}")]
    UnsupportedSoft(String),
    #[error("cannot parse solver model: {0}")]
    ModelParse(String),
    #[error("emitted sample violates the formula: {0}")]
    SoundnessViolation(String),
    #[error("coverage bitmaps do not match: {0}")]
    BitmapMismatch(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
