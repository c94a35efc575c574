use thiserror::Error;

/// Problems with an experiment description.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error("parse error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

/// Errors raised while running an experiment.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error(transparent)]
    Solver(#[from] srlasso::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
