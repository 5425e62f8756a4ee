use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmError {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("device capacity exceeded: requested {requested} items, capacity {capacity}")]
    ResourceExhausted { requested: usize, capacity: usize },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operation on an empty structure")]
    Empty,
}
