use thiserror::Error;

/// Errors surfaced by ingestion, fitting, estimation and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no controls")]
    NoControls,

    #[error("no treated units")]
    NoTreated,

    #[error("unestimable key {0}: empty control set")]
    UnestimableKey(String),

    #[error("root pattern has no parent")]
    RootHasNoParent,

    #[error("empty stratum {0}")]
    EmptyStratum(u32),

    #[error("strata without treated nodes: {0:?}")]
    StrataWithoutTreated(Vec<u32>),

    #[error("propensity score {value} at node {node} is degenerate (0 or 1)")]
    DegeneratePropensity { node: usize, value: f64 },

    #[error("linear system (I - beta * A) is singular or did not converge")]
    SingularSystem,

    #[error("brute-force reference refuses n = {0} (limit 12)")]
    TooLarge(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
