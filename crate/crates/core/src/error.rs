use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: {msg}")]
    Validation { line: u64, msg: String },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("no curve for model `{model}` on dataset `{dataset}`")]
    MissingCurve { model: String, dataset: String },

    #[error("no points under budget (max size {max_size})")]
    EmptyBudget { max_size: u64 },

    #[error("{0}")]
    Domain(String),

    #[error("underdetermined fit: {got} points, need at least {need}")]
    Underdetermined { got: usize, need: usize },

    #[error("all {starts} optimizer starts diverged")]
    NonConvergence {
        starts: usize,
        best_effort: Option<crate::laws::LawParams>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("model `{model}`: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input files or their contents rather
    /// than by a computation over valid data.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::UnknownModel(_)
            | Error::MissingCurve { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Model { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn for_model(self, model: &str) -> Error {
        Error::Model {
            model: model.to_string(),
            source: Box::new(self),
        }
    }
}
