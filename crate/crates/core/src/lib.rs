//! Sparse Polyak: iterative thresholding with adaptive step sizes for sparse
//! GLM estimation, plus synthetic instances and diagnostics.

pub mod artifact;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod optimizer;
pub mod rng;
pub mod synthdata;
pub mod thresholding;

pub use error::{Error, Result};
pub use objectives::{Dataset, Family, ObjectiveModel, ParamVector};
pub use optimizer::{run, HtWidth, RunConfig, RunTrace, Status, StepRule};
pub use thresholding::{ThresholdKind, ThresholdSpec};
