//! Power allocation for a two-hop decode-and-forward link whose relay may
//! transmit and receive at once, at the cost of residual self-interference.
//!
//! The [`allocator`] computes the max-min rate plan in closed form; the
//! [`oracle`] module checks it by brute force, and [`baselines`] provides the
//! reference schemes used for comparison sweeps.

pub mod allocator;
pub mod baselines;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod twodelta;

pub use error::{Error, Result};
