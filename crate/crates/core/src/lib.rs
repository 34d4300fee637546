//! Arrival-time distributions of free Gaussian wave packets.
//!
//! The crate evaluates several competing time-of-arrival densities for a
//! point detector (Kijowski, its singular-integral form, probability flux,
//! semiclassical, and the quantum clock), and provides the statistics needed
//! to decide how many detector clicks separate two of them.

pub mod error;
pub mod numerics;
pub mod par;
pub mod toa;
pub mod scenario;
pub mod stats;
pub mod units;
pub mod wavefunc;

pub use error::{Result, ToaError};
