//! Single-pass streaming estimation of the Max-DICUT value of a directed
//! multigraph in roughly square-root space.
//!
//! The estimator never looks at the whole graph. Instead it tracks a
//! *refined snapshot*: the fraction of edge mass flowing between vertices of
//! a given (degree class, bias class) pair. A layered sketch samples
//! vertices with probabilities that grow with their degree, subsamples
//! edges in high layers, and recovers a window-smoothed estimate of that
//! array. Any oblivious assignment rule (a probability per bias class) can
//! then be evaluated on the projected snapshot.
//!
//! Modules, bottom-up:
//!
//! - [`multigraph`]: graphs, degrees, biases, cut values, exact oracles.
//! - [`partition`]: threshold vectors and class indices.
//! - [`snapshot`]: exact snapshot matrices and refined snapshot arrays.
//! - [`smoothing`]: windows, normalizers, smoothed and sandwich arrays.
//! - [`oblivious`]: linear oblivious snapshot algorithms.
//! - [`hashfam`]: k-wise independent hashing over binary fields.
//! - [`sketcher`]: the streaming sketch, its merge rule and the estimator.

pub mod error;
pub mod hashfam;
pub mod multigraph;
pub mod oblivious;
pub mod partition;
pub mod rng;
pub mod sketcher;
pub mod smoothing;
pub mod snapshot;

pub use error::{Error, Result};
pub use hashfam::KWiseHash;
pub use multigraph::{Cut, Edge, Multigraph, VertexStats};
pub use oblivious::ObliviousAlg;
pub use partition::{DegreeThresholds, ThresholdVector};
pub use smoothing::{NormalizerKind, PointwiseReport};
pub use snapshot::{RefinedSnapshotArray, SnapshotMatrix};
