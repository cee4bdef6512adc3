use thiserror::Error;

/// Runtime errors shared by the MDL interpreter and the native baselines.
#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error("numerics error: {0}")]
    Numerics(String),
    #[error("arity error: expected {expected} parameters, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("parameter '{name}' = {value} outside bounds [{lower}, {upper}]")]
    Bounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("paradigm mismatch: {0}")]
    ParadigmMismatch(String),
    #[error("binding error: {0}")]
    Binding(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("step budget of {0} interpreted operations exceeded")]
    StepBudget(u32),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("too few participants: {have} cannot fill a non-empty three-way split")]
    TooFewParticipants { have: usize },
    #[error("invalid split fractions: {0}")]
    InvalidSplit(String),
}

impl From<csv::Error> for DataError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => DataError::Io(io),
            other => DataError::SchemaMismatch(format!("{:?}", other)),
        }
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("all {0} restarts failed")]
    AllRestartsFailed(usize),
    #[error("non-finite objective at start point")]
    NonFiniteObjective,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("participant sets differ between models: {0}")]
    ParticipantSetMismatch(String),
    #[error("non-finite log evidence at participant {participant}, model {model}")]
    NonFiniteEvidence { participant: usize, model: usize },
    #[error("comparison needs at least two models, got {0}")]
    TooFewModels(usize),
}

/// Transport-level outcome of one proposal attempt.
#[derive(Debug, Error)]
pub enum EngineError {
    /// Network or server failure worth retrying.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited,
    #[error("empty response")]
    Empty,
    /// Permanent failure; retrying will not help.
    #[error("engine failure: {0}")]
    Failed(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("all prompt components are disabled")]
    AllComponentsDisabled,
    #[error("engine unreachable after {attempts} attempts: {last}")]
    EngineUnreachable { attempts: usize, last: String },
    #[error("rate limited after {0} attempts")]
    RateLimited(usize),
    #[error("engine returned an empty response")]
    EmptyResponse,
    #[error("no fenced model blocks found in the response")]
    NoBlocksFound,
    #[error("run aborted at iteration {iteration}: {cause}")]
    RunAborted { iteration: usize, cause: String },
    #[error("test data leaked into a prompt: {0}")]
    TestDataLeak(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum PpcError {
    #[error("paradigm mismatch: expected {expected}, got {got}")]
    ParadigmMismatch { expected: String, got: String },
    #[error("missing block label for block {0}")]
    MissingLabels(usize),
    #[error("missing correct-action entry for participant {participant}, block {block}, stimulus {stimulus}")]
    MissingCorrectMap {
        participant: String,
        block: usize,
        stimulus: usize,
    },
}
