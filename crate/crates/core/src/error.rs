use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The variants map onto the CLI exit-code contract: `Config`, `Format`,
/// `Parse` and `Io` are configuration problems, `Resource` is a budget
/// failure, everything else is a runtime/domain failure.
#[derive(Debug, Error)]
pub enum FppError {
    #[error("unknown generator label `{0}`")]
    UnknownLabel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("automaton format error (line {line}): {msg}")]
    Format { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} (cap = {cap})")]
    Resource { what: String, cap: u64 },

    #[error("target unreachable inside domain: {0}")]
    Unreachable(String),

    #[error("numeric failure: {msg} (residual = {residual:e})")]
    Numeric { msg: String, residual: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FppError {
    pub fn domain(msg: impl Into<String>) -> Self {
        FppError::Domain(msg.into())
    }

    pub fn resource(what: impl Into<String>, cap: u64) -> Self {
        FppError::Resource {
            what: what.into(),
            cap,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        FppError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, FppError>;
