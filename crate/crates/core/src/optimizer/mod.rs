//! Iterative thresholding with adaptive step sizes.
//!
//! Each iteration takes a gradient step and re-sparsifies:
//!
//! ```text
//! theta_{t+1} = phi_s(theta_t - gamma_t grad f(theta_t))
//! ```
//!
//! `gamma_t` comes from a [`StepRule`]. The run records one [`IterRecord`] per
//! visited iterate, starting with `theta_0`.

mod step;
pub mod trace;

pub use step::{
    classic_polyak_step, fixed_step_lhat, sparse_polyak_step, theoretical_floor, HtWidth, StepRule,
};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveModel, ParamVector};
use crate::thresholding::{ht_norm_sq, ThresholdSpec};

pub const DEFAULT_MAX_ITERS: usize = 500;

/// Default stopping tolerance on `f - f_hat`, relative to `|f_hat| + 1`.
pub fn default_stop_tol(f_hat: f64) -> f64 {
    1e-12 * (f_hat.abs() + 1.0)
}

#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub model: &'a ObjectiveModel,
    pub operator: ThresholdSpec,
    pub step_rule: StepRule,
    pub theta0: ParamVector,
    pub max_iters: usize,
    /// Absolute tolerance on `f(theta_t) - f_hat`. Ignored by fixed steps.
    pub stop_tol: f64,
    /// Recorded for provenance only; the iteration itself is deterministic.
    pub seed: u64,
    /// Reference point for `error_sq`, when known.
    pub truth: Option<&'a ParamVector>,
}

impl<'a> RunConfig<'a> {
    /// Starts from zero with default budget and tolerance.
    pub fn new(model: &'a ObjectiveModel, operator: ThresholdSpec, step_rule: StepRule) -> Self {
        let stop_tol = step_rule.f_hat().map_or(0.0, default_stop_tol);
        RunConfig {
            model,
            operator,
            step_rule,
            theta0: ParamVector::zeros(model.dim()),
            max_iters: DEFAULT_MAX_ITERS,
            stop_tol,
            seed: 0,
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: &'a ParamVector) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_theta0(mut self, theta0: ParamVector) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.model.dim();
        if self.operator.s > d {
            return Err(Error::invalid(format!(
                "operator budget s = {} exceeds dimension d = {d}",
                self.operator.s
            )));
        }
        if self.theta0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.theta0.len(),
            });
        }
        if self.theta0.nnz() > self.operator.s {
            return Err(Error::invalid(format!(
                "initial iterate has {} nonzeros, more than s = {}",
                self.theta0.nnz(),
                self.operator.s
            )));
        }
        if let Some(truth) = self.truth {
            if truth.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: truth.len(),
                });
            }
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::invalid("stop_tol must be nonnegative"));
        }
        self.step_rule.validate()
    }

    /// Width used for the recorded `grad_ht_norm_sq` column.
    fn ht_width(&self) -> usize {
        let w = match self.step_rule {
            StepRule::SparsePolyak { ht_width, .. } => ht_width.resolve(self.operator.s),
            _ => self.operator.s,
        };
        w.min(self.model.dim())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    MaxIters,
    Converged,
    StalledZeroGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub f_value: f64,
    /// Step taken from this iterate. Zero on a stalled final record.
    pub step_size: f64,
    pub grad_ht_norm_sq: f64,
    pub error_sq: Option<f64>,
    pub support_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    pub status: Status,
    pub final_theta: ParamVector,
}

impl RunTrace {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("a trace always holds theta_0")
    }

    pub fn final_error_sq(&self) -> Option<f64> {
        self.last().error_sq
    }

    pub fn error_series(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.error_sq).collect()
    }

    pub fn step_sizes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.step_size).collect()
    }
}

/// State handed to an observer after each applied update.
pub struct StepView<'v> {
    pub iter: usize,
    pub theta: &'v ParamVector,
    pub gradient: &'v Array1<f64>,
    pub step_size: f64,
    /// `theta - step_size * gradient`, before thresholding.
    pub pre_threshold: &'v Array1<f64>,
    pub next: &'v ParamVector,
}

pub fn run(config: &RunConfig<'_>) -> Result<RunTrace> {
    run_observed(config, |_| {})
}

/// Like [`run`], calling `observer` after every update that is applied.
pub fn run_observed<F>(config: &RunConfig<'_>, mut observer: F) -> Result<RunTrace>
where
    F: FnMut(&StepView<'_>),
{
    config.validate()?;
    let width = config.ht_width();
    let f_hat = config.step_rule.f_hat();
    let mut theta = config.theta0.clone();
    let mut records = Vec::with_capacity(config.max_iters.min(100_000) + 1);

    let status = 'outer: {
        for t in 0..=config.max_iters {
            let (f_val, grad) = config.model.value_and_gradient(&theta).map_err(|e| e.at_iteration(t))?;
            let grad_ht = ht_norm_sq(grad.view(), width).map_err(|e| e.at_iteration(t))?;
            let step = match config.step_rule {
                StepRule::SparsePolyak { f_hat, .. } => {
                    step::polyak_ratio(f_val - f_hat, 5.0 * grad_ht)
                }
                StepRule::ClassicPolyak { f_hat } => classic_polyak_step(f_val, f_hat, grad.view()),
                StepRule::Fixed { gamma } => Some(gamma),
            };
            records.push(IterRecord {
                iter: t,
                f_value: f_val,
                step_size: step.unwrap_or(0.0),
                grad_ht_norm_sq: grad_ht,
                error_sq: config.truth.map(|truth| theta.dist_sq(truth)),
                support_size: theta.nnz(),
            });

            if f_hat.is_some_and(|f_hat| f_val - f_hat <= config.stop_tol) {
                break 'outer Status::Converged;
            }
            let Some(gamma) = step else {
                break 'outer Status::StalledZeroGradient;
            };
            if t == config.max_iters {
                break;
            }

            let pre_threshold = theta.values().to_owned() - &(gamma * &grad);
            let next = ParamVector::from_values(
                config
                    .operator
                    .apply(pre_threshold.view())
                    .map_err(|e| e.at_iteration(t))?,
            );
            observer(&StepView {
                iter: t,
                theta: &theta,
                gradient: &grad,
                step_size: gamma,
                pre_threshold: &pre_threshold,
                next: &next,
            });
            theta = next;
        }
        Status::MaxIters
    };

    Ok(RunTrace {
        records,
        status,
        final_theta: theta,
    })
}
