use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label shape: {0}")]
    InvalidShape(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid time-window query: {0}")]
    InvalidQuery(String),

    #[error("region belongs to event {region} but was paired with event {event}")]
    EventMismatch { region: usize, event: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{pairs} conflict pairs exceed the exhaustive cap of {cap}")]
    PairCapExceeded { pairs: usize, cap: usize },

    #[error("conflict neighborhood of event {event} has {size} events, exact limit is {limit}")]
    NeighborhoodTooLarge {
        event: usize,
        size: usize,
        limit: usize,
    },

    #[error("instance has no events")]
    EmptyInstance,

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("stored volume {stored} does not match recomputed volume {computed}")]
    VolumeMismatch { stored: f64, computed: f64 },

    #[error("active set contains conflicting events {0} and {1}")]
    ConflictingActiveSet(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
