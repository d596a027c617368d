use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the corpus, noising, sampling and scoring layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: invalid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: u64 },

    #[error("{file}:{line}: {msg}")]
    M2Parse {
        file: String,
        line: u64,
        msg: String,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("noise profile: {0}")]
    Profile(String),

    #[error("rule {rule_id}: {msg}")]
    Rule { rule_id: String, msg: String },

    #[error("{file}:{line}: malformed rule line: {msg}")]
    RuleParse {
        file: String,
        line: u64,
        msg: String,
    },

    #[error("provider: {0}")]
    Provider(String),

    #[error("sampler: {0}")]
    Sampler(String),

    #[error("text contains a tab or newline: {0:?}")]
    IllegalText(String),

    #[error("gold blocks ({gold}) and hypotheses ({hyp}) differ in count")]
    CountMismatch { gold: usize, hyp: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
