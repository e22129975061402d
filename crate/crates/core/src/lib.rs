//! Simulation of interdomain routing under partial S*BGP deployment.
//!
//! Modules, bottom up: [`topology`] loads and labels the AS graph, [`routing`]
//! computes stable routing outcomes, [`partitions`] and [`analysis`] derive
//! security metrics from them, and [`oracle`] holds brute-force references
//! used by the test suites.

pub mod routing;
pub mod topology;
pub mod oracle;
pub mod partitions;
pub mod analysis;
pub mod fixtures;
