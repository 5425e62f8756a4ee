//! A simulated external-memory machine and the I/O-efficient primitives
//! built on it: scanning, multiway-merge sorting, list ranking, Euler tours
//! and time-forward processing.
//!
//! The machine charges one I/O per block of `B` items moved between the
//! simulated disk and main memory, which holds `M` items. Algorithms in the
//! dependent crates are written against these primitives so their measured
//! I/O counts can be compared with the bounds they claim.

mod device;
mod error;
mod euler;
mod list_rank;
mod relay;
mod scan_sort;
mod time_forward;
pub mod tree;

pub use device::{ArrayWriter, Device, DeviceParams, DiskArray, IoStats};
pub use error::EmError;
pub use euler::{em_euler_tour, EulerArc, EulerTour};
pub use list_rank::{em_list_fold, em_list_rank, ListRecord};
pub use relay::RelayQueue;
pub use scan_sort::{em_scan, em_sort_by_key, sort_bound};
pub use time_forward::{em_time_forward, TfNode};

pub type Result<T> = std::result::Result<T, EmError>;
