use std::fmt;

use thiserror::Error;

/// One problem found while checking a response against its questionnaire.
#[derive(Debug, Clone, PartialEq)]
pub enum ResponseIssue {
    MissingAnswer(String),
    OutOfRange { question: String, value: String },
    UnknownQuestion(String),
}

impl fmt::Display for ResponseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseIssue::MissingAnswer(q) => write!(f, "missing answer for {q}"),
            ResponseIssue::OutOfRange { question, value } => {
                write!(f, "answer {value} out of range for {question}")
            }
            ResponseIssue::UnknownQuestion(q) => write!(f, "unknown question {q}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid questionnaire: {0}")]
    InvalidQuestionnaire(String),
    #[error("invalid response {respondent}: {}", join_issues(.issues))]
    InvalidResponse {
        respondent: String,
        issues: Vec<ResponseIssue>,
    },
    #[error("record {0} has no label")]
    UnlabeledRecord(String),
    #[error("question {0} has no marginals")]
    MissingMarginals(String),
    #[error("invalid question {0}")]
    InvalidQuestion(String),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("regularization constant C must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("solver stalled after {0} iterations")]
    Stalled(usize),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("split ratios must be positive and sum to 1")]
    BadRatios,
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("fold count {k} invalid for {n} samples")]
    BadK { k: usize, n: usize },
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("nothing to score")]
    Empty,
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("every fold was skipped")]
    AllFoldsSkipped,
    #[error("malformed ablation matrix: {0}")]
    MalformedMatrix(String),
}

fn join_issues(issues: &[ResponseIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
