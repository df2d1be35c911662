use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty parameter grid dimension `{0}`")]
    EmptyGrid(&'static str),

    /// Invalid configuration value; `path` names the offending key.
    #[error("invalid configuration at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("failed to parse `{path}`: {msg}")]
    Parse { path: String, msg: String },

    #[error("invalid deployment: {0}")]
    Deployment(String),

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("cannot write `{path}`: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config_err<T>(path: impl Into<String>, msg: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        path: path.into(),
        msg: msg.into(),
    })
}
