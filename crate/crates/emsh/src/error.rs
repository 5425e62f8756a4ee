use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmshError {
    #[error("heap is empty")]
    Empty,
    #[error("incompatible heaps: {0}")]
    Incompatible(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dangling delete record for a key with no matching element")]
    DanglingDelete,
    #[error("delete by key requires a hard heap")]
    NotHardHeap,
    #[error(transparent)]
    Device(#[from] em_core::EmError),
}
