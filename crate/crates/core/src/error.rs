use std::path::PathBuf;

use crate::model::Vartype;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("assignment is missing variable {0}")]
    MissingVariable(usize),

    #[error("assignment has {got} values but the model has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },

    #[error("value {value} of variable {var} is not in the {vartype} domain")]
    VartypeMismatch { var: usize, value: i8, vartype: Vartype },

    #[error("operation requires a spin-valued model")]
    NotSpin,

    #[error("variable {0} does not exist in the model")]
    UnknownVariable(usize),

    #[error("self-loop on variable {0}")]
    SelfLoop(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed instance file {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("generator gave up after {0} retries")]
    RetryCap(usize),

    #[error("embedding not found after {0} tries")]
    EmbeddingNotFound(usize),

    #[error("embedding does not fit the hardware: {0}")]
    EmbeddingTooLarge(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("infeasible schedule: {0}")]
    Infeasible(String),

    #[error("sampler endpoint error: {0}")]
    Endpoint(String),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("{0}")]
    SpaceMismatch(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
