use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: {1}")]
    InvalidModulus(String, &'static str),

    #[error("cannot parse Gaussian integer from {0:?}")]
    ParseGaussian(String),

    #[error("node index {index} out of range for a {n_nodes}-node network")]
    NodeOutOfRange { index: usize, n_nodes: usize },

    #[error("endpoint node {0} is faulty")]
    FaultyEndpoint(usize),

    #[error("source and destination are both node {0}")]
    SameEndpoints(usize),

    #[error("fault density {0} outside [0, 0.5]")]
    InvalidDensity(f64),

    #[error("cannot place {requested} faults: only {available} eligible nodes")]
    InfeasibleFaultCount { requested: usize, available: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("training failed at episode {episode}: {source}")]
    Training {
        episode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial} at {context}: {source}")]
    Trial {
        trial: usize,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parameter file: {0}")]
    ParamFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
