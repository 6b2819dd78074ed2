//! Experiment harness for the `dicut-core` estimator: graph generators,
//! lemma-level checks and estimate-versus-optimum comparisons.

pub mod generate;
pub mod verify;
pub mod compare;
