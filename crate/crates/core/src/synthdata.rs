//! Synthetic sparse GLM instances.
//!
//! Each design row is a stationary AR(1) path across features:
//!
//! ```text
//! x_1 = e_1 / sqrt(1 - omega^2),   x_t = omega x_{t-1} + e_t
//! ```
//!
//! so `Sigma_ij = omega^|i-j| / (1 - omega^2)`. Rows, truth and noise each draw
//! from their own substream (see [`crate::rng`]).

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{write_atomic, write_json_atomic, SCHEMA_VERSION, TOOLKIT_VERSION};
use crate::error::{Error, Result};
use crate::objectives::{io, sigmoid, Dataset, Family, ObjectiveModel, ParamVector};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub n: usize,
    pub d: usize,
    pub omega: f64,
    /// Rescale columns to `|X_j|^2 / n = 1`.
    #[serde(default)]
    pub column_normalize: bool,
}

/// Extreme eigenvalues and largest diagonal entry of a design covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub zeta: f64,
}

impl DesignSpec {
    pub fn new(n: usize, d: usize, omega: f64) -> Result<Self> {
        let spec = DesignSpec {
            n,
            d,
            omega,
            column_normalize: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn normalized(mut self) -> Self {
        self.column_normalize = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("design needs n >= 1 and d >= 1"));
        }
        if !(0.0..1.0).contains(&self.omega) {
            return Err(Error::invalid(format!("omega must lie in [0, 1), got {}", self.omega)));
        }
        Ok(())
    }

    /// Population covariance scale: `1/(1-omega^2)` raw, `1` when normalized.
    fn variance(&self) -> f64 {
        if self.column_normalize {
            1.0
        } else {
            1.0 / (1.0 - self.omega * self.omega)
        }
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.omega.powi(i.abs_diff(j) as i32) * self.variance()
    }

    pub fn covariance_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.d, self.d), |(i, j)| self.covariance(i, j))
    }

    /// Exact extreme eigenvalues of `Sigma`. The AR(1) precision matrix is
    /// tridiagonal, so Sturm-sequence bisection on it works at any `d`.
    pub fn spectrum(&self) -> Spectrum {
        let scale = self.variance() * (1.0 - self.omega * self.omega);
        let zeta = self.variance();
        if self.d == 1 || self.omega == 0.0 {
            return Spectrum {
                lambda_min: zeta,
                lambda_max: zeta,
                zeta,
            };
        }
        let w = self.omega;
        let diag: Vec<f64> = (0..self.d)
            .map(|i| if i == 0 || i + 1 == self.d { 1.0 } else { 1.0 + w * w })
            .collect();
        // eigenvalues of the precision matrix lie in [(1-w)^2, (1+w)^2]
        let (lo, hi) = ((1.0 - w) * (1.0 - w) * 0.5, (1.0 + w) * (1.0 + w) * 1.5);
        let q_min = tridiag_eigenvalue(&diag, -w, 0, lo, hi);
        let q_max = tridiag_eigenvalue(&diag, -w, self.d - 1, lo, hi);
        Spectrum {
            lambda_min: scale / q_max,
            lambda_max: scale / q_min,
            zeta,
        }
    }
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `diag` and constant off-diagonal `off`.
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut q = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        q = if i == 0 { a - x } else { a - x - off2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a.abs() + x.abs() + off.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (0-based), bracketed by `[lo, hi]`.
fn tridiag_eigenvalue(diag: &[f64], off: f64, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeDist {
    #[default]
    StdNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub d: usize,
    pub s_star: usize,
    #[serde(default)]
    pub magnitude_dist: MagnitudeDist,
}

impl TruthSpec {
    pub fn new(d: usize, s_star: usize) -> Result<Self> {
        let spec = TruthSpec {
            d,
            s_star,
            magnitude_dist: MagnitudeDist::StdNormal,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("truth dimension must be at least 1"));
        }
        if self.s_star > self.d {
            return Err(Error::invalid(format!(
                "s_star = {} exceeds dimension d = {}",
                self.s_star, self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: Family,
    /// Noise scale; ignored for logistic responses.
    #[serde(default)]
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn linear(sigma: f64) -> Result<Self> {
        let spec = NoiseSpec {
            family: Family::Linear,
            sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn logistic() -> Self {
        NoiseSpec {
            family: Family::Logistic,
            sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Linear && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Curvature constants for a sparsity level `s`, with universal constants
/// set to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub mu: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub tau: f64,
    pub s: usize,
}

impl RegularityParams {
    pub fn new(mu: f64, l: f64, tau: f64, s: usize) -> Self {
        RegularityParams { mu, l, tau, s }
    }

    pub fn mu_bar(&self) -> f64 {
        self.mu - 3.0 * self.tau * self.s as f64
    }

    pub fn l_bar(&self) -> f64 {
        self.l + 3.0 * self.tau * self.s as f64
    }

    /// `None` when `mu_bar <= 0`, i.e. the theory does not apply.
    pub fn kappa_bar(&self) -> Option<f64> {
        let mu_bar = self.mu_bar();
        (mu_bar > 0.0).then(|| self.l_bar() / mu_bar)
    }

    pub fn theory_applicable(&self) -> bool {
        self.mu_bar() > 0.0
    }

    pub fn with_s(self, s: usize) -> Self {
        RegularityParams { s, ..self }
    }
}

/// `mu = sigma_min/2`, `L = 2 sigma_max`, `tau = zeta log(d) / n`.
pub fn compute_regularity(spec: &DesignSpec, s: usize) -> Result<RegularityParams> {
    spec.validate()?;
    let sp = spec.spectrum();
    let tau = sp.zeta * (spec.d as f64).ln() / spec.n as f64;
    Ok(RegularityParams::new(0.5 * sp.lambda_min, 2.0 * sp.lambda_max, tau, s))
}

/// `ceil(c s_star log d)`.
pub fn sample_size(c: f64, s_star: usize, d: usize) -> usize {
    (c * s_star as f64 * (d as f64).ln()).ceil().max(1.0) as usize
}

pub fn generate_design(spec: &DesignSpec, seed: u64) -> Result<Array2<f64>> {
    spec.validate()?;
    let (n, d, w) = (spec.n, spec.d, spec.omega);
    let lead = 1.0 / (1.0 - w * w).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Purpose::Design, i as u64);
            let mut row = Vec::with_capacity(d);
            let mut prev = 0.0;
            for t in 0..d {
                let e: f64 = rng.sample(StandardNormal);
                prev = if t == 0 { lead * e } else { w * prev + e };
                row.push(prev);
            }
            row
        })
        .collect();
    let mut x = Array2::from_shape_vec((n, d), rows.concat()).expect("row lengths match");
    if spec.column_normalize {
        for mut col in x.axis_iter_mut(Axis(1)) {
            let norm = (col.dot(&col) / n as f64).sqrt();
            if norm > 0.0 {
                col /= norm;
            }
        }
    }
    Ok(x)
}

pub fn generate_truth(spec: &TruthSpec, seed: u64) -> Result<ParamVector> {
    spec.validate()?;
    let mut rng = substream(seed, Purpose::Truth, 0);
    let mut support = sample(&mut rng, spec.d, spec.s_star).into_vec();
    support.sort_unstable();
    let mut theta = Array1::zeros(spec.d);
    for j in support {
        let mut v: f64 = rng.sample(StandardNormal);
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        theta[j] = v;
    }
    Ok(ParamVector::from_values(theta))
}

pub fn generate_responses(
    family: Family,
    x: ArrayView2<f64>,
    truth: &ParamVector,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Array1<f64>> {
    if x.ncols() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: truth.len(),
        });
    }
    if family == Family::Linear {
        noise.validate()?;
    }
    let theta = truth.values();
    let support = truth.support();
    let y: Vec<f64> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let eta: f64 = support.iter().map(|&j| row[j] * theta[j]).sum();
            let mut rng = substream(seed, Purpose::Noise, i as u64);
            match family {
                Family::Linear => eta + noise.sigma * rng.sample::<f64, _>(StandardNormal),
                Family::Logistic => {
                    if rng.random::<f64>() < sigmoid(eta) {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    Ok(Array1::from(y))
}

/// Everything needed to regenerate an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub design: DesignSpec,
    pub truth: TruthSpec,
    pub noise: NoiseSpec,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        self.truth.validate()?;
        self.noise.validate()?;
        if self.truth.d != self.design.d {
            return Err(Error::DimensionMismatch {
                expected: self.design.d,
                got: self.truth.d,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub seed: u64,
    pub model: ObjectiveModel,
    pub truth: ParamVector,
}

impl Instance {
    pub fn generate(spec: InstanceSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let x = generate_design(&spec.design, seed)?;
        let truth = generate_truth(&spec.truth, seed)?;
        let y = generate_responses(spec.noise.family, x.view(), &truth, &spec.noise, seed)?;
        let model = ObjectiveModel::new(spec.noise.family, Dataset::new(x, y)?)?;
        Ok(Instance {
            spec,
            seed,
            model,
            truth,
        })
    }

    /// `f(theta_star)`, the natural target value for synthetic runs.
    pub fn f_star(&self) -> Result<f64> {
        self.model.target_value(&self.truth)
    }

    pub fn manifest(&self) -> InstanceManifest {
        InstanceManifest {
            schema_version: SCHEMA_VERSION,
            toolkit_version: TOOLKIT_VERSION.to_string(),
            spec: self.spec,
            seed: self.seed,
        }
    }

    /// Writes `data.csv`, `data.bin` and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("data.csv"), |w| io::write_csv(w, self.model.data()))?;
        write_atomic(&dir.join("data.bin"), |w| io::write_binary(w, &self.model, self.seed))?;
        write_json_atomic(&dir.join("manifest.json"), &self.manifest())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub spec: InstanceSpec,
    pub seed: u64,
}
