//! GLM objectives.
//!
//! Every family is a negative log-likelihood averaged over samples,
//!
//! ```text
//! f(theta) = (1/n) sum_i psi(x_i . theta) - y_i x_i . theta
//! ```
//!
//! where `psi` is the family's cumulant function. The linear family is
//! evaluated as `(1/2n) |y - X theta|^2`, which is the same function plus the
//! constant `(1/2n) |y|^2`. Target values must therefore always come from
//! [`ObjectiveModel::target_value`] so the constant cancels in `f - f_hat`.

pub mod io;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Logistic,
}

impl Family {
    /// `(psi(t), psi'(t))`.
    pub fn cumulant(self, t: f64) -> (f64, f64) {
        match self {
            Family::Linear => (0.5 * t * t, t),
            Family::Logistic => (softplus(t), sigmoid(t)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::Logistic => "logistic",
        }
    }
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Design matrix (rows are samples) and responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("dataset must be non-empty, got {n}x{d}")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        // row-major storage keeps the per-sample loops contiguous
        let x = if x.is_standard_layout() {
            x
        } else {
            x.as_standard_layout().into_owned()
        };
        Ok(Dataset { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }
}

/// Dense coefficient vector with its support cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Array1<f64>,
    support: Vec<usize>,
}

impl ParamVector {
    pub fn zeros(d: usize) -> Self {
        ParamVector {
            values: Array1::zeros(d),
            support: Vec::new(),
        }
    }

    pub fn from_values(values: Array1<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        ParamVector { values, support }
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    /// Ascending indices of nonzero entries.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn into_values(self) -> Array1<f64> {
        self.values
    }

    pub fn dist_sq(&self, other: &ParamVector) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.support.iter().map(|&i| self.values[i] * self.values[i]).sum()
    }
}

impl From<Array1<f64>> for ParamVector {
    fn from(values: Array1<f64>) -> Self {
        ParamVector::from_values(values)
    }
}

/// A GLM family bound to a dataset.
#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    family: Family,
    data: Dataset,
}

impl ObjectiveModel {
    pub fn new(family: Family, data: Dataset) -> Result<Self> {
        if family == Family::Logistic && data.y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("logistic responses must be 0 or 1"));
        }
        Ok(ObjectiveModel { family, data })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.d()
    }

    fn check_dim(&self, theta: &ParamVector) -> Result<()> {
        if theta.len() != self.data.d() {
            return Err(Error::DimensionMismatch {
                expected: self.data.d(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// `X theta`, touching only the support of `theta`.
    fn linear_predictor(&self, theta: &ParamVector) -> Array1<f64> {
        let x = &self.data.x;
        let support = theta.support();
        let values = theta.values();
        Array1::from_shape_fn(self.data.n(), |i| {
            let row = x.row(i);
            support.iter().map(|&j| row[j] * values[j]).sum()
        })
    }

    fn value_from_predictor(&self, eta: &Array1<f64>) -> f64 {
        let n = self.data.n() as f64;
        let y = &self.data.y;
        match self.family {
            Family::Linear => {
                let rss: f64 = eta.iter().zip(y.iter()).map(|(e, y)| (y - e) * (y - e)).sum();
                rss / (2.0 * n)
            }
            Family::Logistic => {
                let total: f64 = eta
                    .iter()
                    .zip(y.iter())
                    .map(|(&e, &y)| softplus(e) - y * e)
                    .sum();
                total / n
            }
        }
    }

    /// `(1/n) X^T (psi'(X theta) - y)`, accumulated row by row in fixed order.
    fn gradient_from_predictor(&self, eta: &Array1<f64>) -> Array1<f64> {
        let n = self.data.n();
        let mut grad = Array1::zeros(self.data.d());
        for i in 0..n {
            let (_, dpsi) = self.family.cumulant(eta[i]);
            let w = dpsi - self.data.y[i];
            if w != 0.0 {
                grad.scaled_add(w, &self.data.x.row(i));
            }
        }
        grad /= n as f64;
        grad
    }

    pub fn value(&self, theta: &ParamVector) -> Result<f64> {
        self.check_dim(theta)?;
        let v = self.value_from_predictor(&self.linear_predictor(theta));
        if !v.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        Ok(v)
    }

    pub fn gradient(&self, theta: &ParamVector) -> Result<Array1<f64>> {
        Ok(self.value_and_gradient(theta)?.1)
    }

    /// Value and gradient from one pass over the predictor.
    pub fn value_and_gradient(&self, theta: &ParamVector) -> Result<(f64, Array1<f64>)> {
        self.check_dim(theta)?;
        let eta = self.linear_predictor(theta);
        let v = self.value_from_predictor(&eta);
        let g = self.gradient_from_predictor(&eta);
        if !v.is_finite() {
            return Err(Error::NonFinite("objective value"));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok((v, g))
    }

    /// Objective at a known reference point, the `f_hat` used by Polyak rules.
    pub fn target_value(&self, truth: &ParamVector) -> Result<f64> {
        self.value(truth)
    }
}
