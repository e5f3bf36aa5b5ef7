use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading a grammar file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: rule <{rule}> references undeclared rule <{missing}>")]
    UndeclaredRule {
        rule: String,
        missing: String,
        line: usize,
    },
    #[error("line {line}: rule <{rule}> has no productions")]
    EmptyRule { rule: String, line: usize },
    #[error("line {line}: rule <{rule}> declared twice")]
    DuplicateRule { rule: String, line: usize },
    #[error("grammar declares no rules")]
    NoRules,
}

/// Errors raised while turning a derivation (or a document) into a tree.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("token {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown observation variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid tree: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("step called after the episode finished")]
    StepAfterDone,
    #[error("action {action} out of range (environment has {count} actions)")]
    InvalidAction { action: usize, count: usize },
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
}

/// Crate-level error for the experiment harness and file IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
