use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its constraint. `key` is the dotted path.
    #[error("invalid configuration `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    #[error("no supply: every active agent holds zero stock")]
    NoSupply,

    #[error("liquidity exhausted: x_in = {x_in} gives price ratio {ratio}")]
    LiquidityExhausted { x_in: f64, ratio: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bisection bracket [{low}, {high}] does not straddle the threshold: {detail}")]
    Bracket { low: f64, high: f64, detail: String },

    #[error("integration diverged after t = {last_finite_time}")]
    Divergence { last_finite_time: f64 },

    #[error("minimum c0 = {c0} sits at the bracket edge [{low}, {high}]; widen the bracket")]
    BracketTooNarrow { c0: f64, low: f64, high: f64 },

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

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::NoSupply => "no_supply",
            Error::LiquidityExhausted { .. } => "liquidity_exhausted",
            Error::Domain(_) => "domain",
            Error::Bracket { .. } => "bracket",
            Error::Divergence { .. } => "divergence",
            Error::BracketTooNarrow { .. } => "bracket_too_narrow",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }
}
