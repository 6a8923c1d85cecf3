//! Adaptive visual search on a grid: a budgeted agent senses cells for
//! targets, adapts its belief map online from the measurements it has
//! collected, and plans where to look next. Ships three planners behind a
//! name-keyed registry, a self-supervised map-adaptation engine, region
//! segmentation utilities, and a paired benchmark harness.

pub mod adapt;
pub mod bench;
pub mod error;
pub mod grid;
pub mod plan;
pub mod priors;
pub mod regions;
pub mod world;

pub use error::{Error, Result};
