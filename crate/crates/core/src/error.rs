use thiserror::Error;

use crate::game::RecallViolation;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid game at node path {path:?}: {message}")]
    Semantic { path: String, message: String },
    #[error("{0}")]
    PerfectRecall(#[from] RecallViolation),
    #[error("invalid pin: {0}")]
    InvalidPin(String),
    #[error("invalid strategic-form game: {0}")]
    Strategic(String),
    #[error("malformed strategy: {0}")]
    Strategy(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
