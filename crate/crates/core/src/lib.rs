//! Fault localization over recorded dynamic evidence.
//!
//! The crate scores program entities for suspiciousness with spectrum,
//! mutation, predicate-switching and stack-trace techniques, fuses them, and
//! evaluates the resulting rankings against ground truth derived from fixes.

pub mod error;
#[doc(hidden)]
pub mod fixtures;
pub mod fusion;
pub mod harness;
pub mod ground_truth;
pub mod mbfl;
pub mod metrics;
pub mod model;
pub mod ranking;
pub mod reachability;
pub mod sbfl;
pub mod stats;
pub mod technique;
pub mod validate;
pub mod wire;

pub use error::{Error, IngestError, Result};
pub use model::{Entity, Granularity, LocationKey, ProgramModel, TestEvidence};
pub use ranking::{Score, SuspiciousnessList};
pub use technique::{Family, Technique};
