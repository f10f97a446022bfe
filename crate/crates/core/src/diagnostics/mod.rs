//! Empirical checks on runs and objectives.

mod assumptions;
mod compare;

pub use assumptions::{check_rsc, check_rss, check_weak_rsc, Assumption, AssumptionReport};
pub use compare::{
    compare_operators, dimension_sweep, run_cell, run_grid, write_sweep_csv, ComparisonRow, GridCell, GridResult,
    GridSetup, StepChoice, SweepRow, SweepSetup,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ParamVector;
use crate::optimizer::{RunTrace, StepView};

/// An iterate counts as "at the plateau" once its error is within this
/// factor of the plateau level.
pub const PLATEAU_BAND: f64 = 2.0;

/// Median of a slice; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median over the last tenth of an error series (at least one entry).
pub fn plateau(errors: &[f64]) -> Option<f64> {
    let tail = errors.len().div_ceil(10).max(1).min(errors.len());
    median(&errors[errors.len() - tail..])
}

/// First iteration whose error is within [`PLATEAU_BAND`] of `plateau`.
pub fn iters_to_floor(errors: &[f64], plateau: f64) -> Option<usize> {
    errors.iter().position(|&e| e <= PLATEAU_BAND * plateau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionProfile {
    /// Iteration `t` of each ratio.
    pub iters: Vec<usize>,
    /// `error_sq(t+1) / error_sq(t)`.
    pub ratios: Vec<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
}

/// Per-step error ratios over iterations whose error is at least `floor`.
/// Iterations with zero error are skipped since their ratio is undefined.
pub fn contraction_profile(trace: &RunTrace, floor: f64) -> Result<ContractionProfile> {
    let errors = trace
        .error_series()
        .ok_or_else(|| Error::invalid("trace has no error_sq column"))?;
    Ok(profile_from_errors(&errors, floor))
}

pub fn profile_from_errors(errors: &[f64], floor: f64) -> ContractionProfile {
    let (iters, ratios): (Vec<usize>, Vec<f64>) = errors
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] >= floor && w[0] > 0.0)
        .map(|(t, w)| (t, w[1] / w[0]))
        .unzip();
    ContractionProfile {
        max: ratios.iter().copied().reduce(f64::max),
        median: median(&ratios),
        iters,
        ratios,
    }
}

/// Regimes of the convergence analysis, by distance to the reference point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    /// `|theta_t - theta_hat| >= 1`.
    Far,
    /// Inside the unit ball, above the floor.
    Local,
    /// Below the floor.
    Confined,
}

pub fn classify_modes(errors: &[f64], floor: f64) -> Vec<ConvergenceMode> {
    errors
        .iter()
        .map(|&e| {
            if e >= 1.0 {
                ConvergenceMode::Far
            } else if e >= floor {
                ConvergenceMode::Local
            } else {
                ConvergenceMode::Confined
            }
        })
        .collect()
}

/// Slack in the per-step thresholding bound
///
/// ```text
/// |theta_{t+1} - theta_hat|^2 <= (1 + 4 eta) |[theta_tilde]_S - theta_hat|^2
/// ```
///
/// where `S` is the union of the supports of `theta_{t+1}` and `theta_hat`.
/// Negative means violated.
pub fn decomposition_slack(view: &StepView<'_>, theta_hat: &ParamVector, eta: f64) -> f64 {
    let next = view.next.values();
    let hat = theta_hat.values();
    let lhs = view.next.dist_sq(theta_hat);
    let mut in_union = vec![false; next.len()];
    for &j in view.next.support().iter().chain(theta_hat.support()) {
        in_union[j] = true;
    }
    let restricted: f64 = in_union
        .iter()
        .enumerate()
        .map(|(j, &keep)| {
            let v = if keep { view.pre_threshold[j] } else { 0.0 };
            (v - hat[j]).powi(2)
        })
        .sum();
    (1.0 + 4.0 * eta) * restricted - lhs
}
