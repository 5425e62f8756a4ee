//! External-memory soft heap: a meldable priority queue that may corrupt a
//! bounded fraction of its keys, together with its exact specialization (the
//! hard heap) and the selection, near-sorting and heap-sort routines built
//! on top of them.
//!
//! The structure is a set of sqrt(m)-ary trees on the simulated device. Low
//! ranks hold sorted element arrays (pnodes); ranks above the corruption
//! threshold hold doubly linked lists of element batches that share one
//! revised key (cnodes). Per-rank buckets live in main memory with at most
//! one block of staged elements charged against the device.

mod applications;
mod error;
mod heap;
mod params;

pub use applications::{heap_sort, near_sort, select_median};
pub use error::EmshError;
pub use heap::{Emsh, Removed};
pub use params::EmshParams;

pub type Result<T> = std::result::Result<T, EmshError>;
