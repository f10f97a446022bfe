//! Trace persistence: one CSV row per iterate plus a JSON summary.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RunConfig, RunTrace, Status, StepRule};
use crate::diagnostics::{iters_to_floor, plateau};
use crate::error::Result;
use crate::objectives::Family;
use crate::thresholding::ThresholdSpec;

pub const TRACE_HEADER: &str = "iter,f_value,step_size,grad_ht_norm_sq,error_sq,support_size";

/// Twelve significant digits in scientific notation.
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &RunTrace) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.records {
        let err = r.error_sq.map(format_sig12).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.iter,
            format_sig12(r.f_value),
            format_sig12(r.step_size),
            format_sig12(r.grad_ht_norm_sq),
            err,
            r.support_size
        )?;
    }
    w.flush()?;
    Ok(())
}

/// The parts of a [`RunConfig`] that define a run, minus the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub operator: ThresholdSpec,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub seed: u64,
    pub theta0_nnz: usize,
}

impl RunEcho {
    pub fn from_config(config: &RunConfig<'_>) -> Self {
        RunEcho {
            family: config.model.family(),
            n: config.model.data().n(),
            d: config.model.dim(),
            operator: config.operator,
            step_rule: config.step_rule,
            max_iters: config.max_iters,
            stop_tol: config.stop_tol,
            seed: config.seed,
            theta0_nnz: config.theta0.nnz(),
        }
    }
}

/// SHA-256 over `"config <len>\0<json>"`, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    let mut h = Sha256::new();
    h.update(format!("config {}\0", json.len()).as_bytes());
    h.update(json.as_bytes());
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: Status,
    pub iterations: usize,
    pub final_f_value: f64,
    pub final_error_sq: Option<f64>,
    /// Median error over the last tenth of the trace.
    pub plateau_error_sq: Option<f64>,
    pub iters_to_floor: Option<usize>,
    pub config: serde_json::Value,
    pub config_hash: String,
}

impl TraceSummary {
    pub fn new<T: Serialize>(trace: &RunTrace, config: &T) -> Result<Self> {
        let errors = trace.error_series();
        let plateau_error_sq = errors.as_deref().and_then(plateau);
        let iters = match (errors.as_deref(), plateau_error_sq) {
            (Some(e), Some(p)) => iters_to_floor(e, p),
            _ => None,
        };
        Ok(TraceSummary {
            status: trace.status,
            iterations: trace.records.len() - 1,
            final_f_value: trace.last().f_value,
            final_error_sq: trace.final_error_sq(),
            plateau_error_sq,
            iters_to_floor: iters,
            config: serde_json::to_value(config)?,
            config_hash: config_hash(config)?,
        })
    }
}
