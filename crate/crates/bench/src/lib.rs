//! Shared inputs for the criterion benches.

pub use btw_core::fixtures;
