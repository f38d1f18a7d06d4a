//! Lowering detection for sport climbing from a wall-mounted, duty-cycled
//! quickdraw accelerometer.
//!
//! The crate is organised along the data path:
//!
//! * [`sensor`] emulates the ultra-low-power node (quantization, sleep/active
//!   duty cycling, 8-sample averaging, 2-sample batching).
//! * [`synth`] produces labeled analog traces for scripted climbs.
//! * [`station`] serializes packets, assembles climb sessions and persists corpora.
//! * [`orientation`] maps sensor-frame acceleration to wall-frame plane angles.
//! * [`features`] resamples climbs, cuts sliding windows and computes statistics.
//! * [`learner`] holds the decision tree, stratified cross-validation and metrics.
//! * [`pipeline`] glues the stages together for batch runs.

pub mod activity;
pub mod features;
pub mod learner;
pub mod orientation;
pub mod pipeline;
pub mod sensor;
pub mod station;
pub mod synth;

pub use activity::{Activity, Label};
