//! The streaming estimator.
//!
//! [`params`] derives every constant from the accuracy, the vertex count and
//! a guess of the edge count. [`sketch`] turns edges into mergeable layered
//! samples. [`estimate`] recovers a smoothed refined snapshot from a sketch
//! and evaluates an oblivious algorithm on it. [`stream`] wraps everything
//! for an unknown edge count: it buffers short streams, runs one sketch per
//! guess on a geometric grid, and reports the one matching the final count.

pub mod estimate;
pub mod params;
pub mod sketch;
pub mod stream;

pub use estimate::{estimate_array, finalize, EstimateReport, Outcome};
pub use params::{LayerParams, ParamOverrides, ParamSet};
pub use sketch::{space_report, FullSketch, LayerSketch, LayerSpace, Sketcher, StoredEdge};
pub use stream::{run_stream, RunConfig, RunReport};
