use thiserror::Error;

/// Errors produced by corpus ingestion, training, evaluation and model I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty encoded corpus (no in-vocabulary tokens)")]
    EmptyEncodedCorpus,

    #[error("empty context")]
    EmptyContext,

    #[error("negative table size {size} is smaller than the vocabulary ({vocab} words)")]
    TableTooSmall { size: usize, vocab: usize },

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("vocabulary of {0} words is too small for analogy answering (need more than 3)")]
    VocabTooSmall(usize),

    #[error("no answerable questions")]
    NoAnswerableQuestions,

    #[error("only {0} scored pairs; need at least 2 for a rank correlation")]
    TooFewScoredPairs(usize),

    #[error("cannot cluster {points} points into {k} clusters")]
    TooFewPoints { points: usize, k: usize },

    #[error("{0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
