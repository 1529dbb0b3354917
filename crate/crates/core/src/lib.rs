//! Throughput of a primary 802.11 DCF network sharing its channel with a
//! secondary DCF network that periodically scans for primary activity.
//!
//! The crate provides
//! - the per-state fixed points of the back-off chain ([`fixed_point`]),
//! - the slot-type distributions and scan-outcome chain ([`scan`]),
//! - primary/secondary throughput for three secondary access schemes
//!   ([`throughput`], [`analysis`]),
//! - a grid-search optimizer for the secondary parameters ([`optimizer`]),
//! - a slot-level simulator used to check the model ([`sim`]).
//!
//! ```
//! use dcf_coexist::{analyze, Scenario};
//!
//! let a = analyze(&Scenario::reference()).unwrap();
//! assert!((a.report.pt - 0.688982).abs() < 1e-4);
//! ```

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod fixed_point;
pub mod optimizer;
pub mod params;
pub mod scan;
pub mod sim;
pub mod throughput;

pub use analysis::{analyze, Analysis};
pub use error::{Error, Result};
pub use params::{
    normalize_us, validate, Backoff, NetworkParams, Scenario, Scheme, SchemeConfig,
    ThroughputAccounting, TimingMicros, TimingParams, REFERENCE_PRESET,
};
pub use throughput::ThroughputReport;
