//! Day-ahead co-optimization of geo-distributed data-center workloads and
//! frequency-regulation capacity, with a delivery simulator to replay
//! regulation signals against committed schedules.

pub mod error;
pub mod grid;
pub mod instance;
pub mod optimizer;
pub mod harness;
pub mod signal;
pub mod simulator;
pub mod spacetime;
pub mod workload;

pub use error::{Error, Result};
