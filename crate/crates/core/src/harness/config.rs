//! Experiment configuration.
//!
//! TOML with one table per section, or equivalently dotted keys such as
//! `design.omega = 0.5`. Unknown keys are rejected. Every field has a
//! default, so an empty file selects the built-in desk-scale profile.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::diagnostics::{GridSetup, StepChoice, SweepSetup};
use crate::objectives::Family;
use crate::optimizer::HtWidth;
use crate::synthdata::{sample_size, DesignSpec, InstanceSpec, NoiseSpec, TruthSpec};
use crate::thresholding::{ThresholdKind, ThresholdSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub design: DesignSection,
    pub truth: TruthSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub concavity: ConcavitySection,
    pub check: CheckSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (0..11).collect(),
            output_dir: None,
            workers: None,
            design: DesignSection::default(),
            truth: TruthSection::default(),
            noise: NoiseSection::default(),
            run: RunSection::default(),
            grid: GridSection::default(),
            sweep: SweepSection::default(),
            concavity: ConcavitySection::default(),
            check: CheckSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    /// Sample size. When absent, `ceil(n_factor * s_star * ln d)`.
    pub n: Option<usize>,
    pub n_factor: f64,
    pub d: usize,
    pub omega: f64,
    pub column_normalize: bool,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            n: None,
            n_factor: 5.0,
            d: 1000,
            omega: 0.5,
            column_normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthSection {
    pub s_star: usize,
}

impl Default for TruthSection {
    fn default() -> Self {
        TruthSection { s_star: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub family: Family,
    pub sigma: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            family: Family::Linear,
            sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    SparsePolyak,
    ClassicPolyak,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub operator: ThresholdKind,
    /// Sparsity budget. When absent, `2 * s_star`.
    pub s: Option<usize>,
    pub step_rule: StepKind,
    /// When absent, `s` for linear and `2s` for logistic.
    pub ht_width: Option<HtWidth>,
    /// When absent, the fixed rule uses `1 / L_hat`.
    pub fixed_gamma: Option<f64>,
    /// When absent, `f(theta_star)`. Only the `run` command honours it.
    pub f_hat: Option<f64>,
    pub max_iters: usize,
    pub stop_tol: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            operator: ThresholdKind::Rt,
            s: None,
            step_rule: StepKind::SparsePolyak,
            ht_width: None,
            fixed_gamma: None,
            f_hat: None,
            max_iters: 500,
            stop_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// When empty, `round(s_star * k / 3)` for `k = 3..=7`.
    pub s_values: Vec<usize>,
    /// Also run the fixed `1 / L_hat` rule over the same grid.
    pub fixed_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub dims: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            dims: vec![250, 500, 1000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcavitySection {
    pub dims: Vec<usize>,
    pub s_values: Vec<usize>,
    pub trials: usize,
}

impl Default for ConcavitySection {
    fn default() -> Self {
        ConcavitySection {
            dims: vec![8],
            s_values: vec![1, 2, 3, 4],
            trials: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    pub pairs: usize,
    /// Sparsity of the sampled pairs. When absent, the run budget `s`.
    pub s: Option<usize>,
    pub mu_scale: f64,
    pub l_scale: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            pairs: 10_000,
            s: None,
            mu_scale: 1.0,
            l_scale: 1.0,
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn n(&self) -> usize {
        self.design
            .n
            .unwrap_or_else(|| sample_size(self.design.n_factor, self.truth.s_star, self.design.d))
    }

    pub fn s(&self) -> usize {
        self.run.s.unwrap_or(2 * self.truth.s_star).max(1)
    }

    pub fn s_grid(&self) -> Vec<usize> {
        if !self.grid.s_values.is_empty() {
            return self.grid.s_values.clone();
        }
        let mut grid: Vec<usize> = (3..=7)
            .map(|k| ((self.truth.s_star * k) as f64 / 3.0).round().max(1.0) as usize)
            .collect();
        grid.dedup();
        grid
    }

    pub fn ht_width(&self) -> HtWidth {
        self.run.ht_width.unwrap_or(match self.noise.family {
            Family::Linear => HtWidth::S,
            Family::Logistic => HtWidth::TwoS,
        })
    }

    /// Checks every semantic constraint, naming the offending key.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let d = self.design.d;
        if self.seeds.is_empty() {
            return Err(bad("seeds", "at least one seed is required"));
        }
        if self.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        if d == 0 {
            return Err(bad("design.d", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.design.omega) {
            return Err(bad("design.omega", format!("must lie in [0, 1), got {}", self.design.omega)));
        }
        if self.design.n == Some(0) {
            return Err(bad("design.n", "must be at least 1"));
        }
        if !(self.design.n_factor > 0.0 && self.design.n_factor.is_finite()) {
            return Err(bad("design.n_factor", "must be positive"));
        }
        if self.truth.s_star > d {
            return Err(bad("truth.s_star", format!("{} exceeds design.d = {d}", self.truth.s_star)));
        }
        if self.noise.family == Family::Linear && !(self.noise.sigma > 0.0 && self.noise.sigma.is_finite()) {
            return Err(bad("noise.sigma", "must be positive for the linear family"));
        }
        let s = self.s();
        if self.run.s == Some(0) || s > d {
            return Err(bad("run.s", format!("must lie in 1..={d}, got {s}")));
        }
        if let Some(g) = self.run.fixed_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(bad("run.fixed_gamma", "must be positive and finite"));
            }
        }
        if self.run.step_rule == StepKind::Fixed && self.run.fixed_gamma.is_none() {
            if self.truth.s_star == 0 {
                return Err(bad("truth.s_star", "the 1/L_hat step needs s_star >= 1"));
            }
            if s < self.truth.s_star {
                return Err(bad("run.s", "the 1/L_hat step needs s >= s_star"));
            }
        }
        if self.run.f_hat.is_some_and(|f| !f.is_finite()) {
            return Err(bad("run.f_hat", "must be finite"));
        }
        if self.run.stop_tol.is_some_and(|t| !(t >= 0.0)) {
            return Err(bad("run.stop_tol", "must be nonnegative"));
        }
        for &gs in &self.grid.s_values {
            if gs == 0 || gs > d {
                return Err(bad("grid.s_values", format!("entry {gs} outside 1..={d}")));
            }
            if self.grid.fixed_baseline && gs < self.truth.s_star {
                return Err(bad("grid.s_values", "the fixed baseline needs every s >= s_star"));
            }
        }
        if self.sweep.dims.is_empty() || self.sweep.dims.iter().any(|&sd| sd < s.max(self.truth.s_star).max(2)) {
            return Err(bad("sweep.dims", "need at least one entry, each >= max(run.s, truth.s_star, 2)"));
        }
        if self.concavity.trials == 0 {
            return Err(bad("concavity.trials", "must be at least 1"));
        }
        if self.concavity.dims.is_empty() || self.concavity.dims.contains(&0) {
            return Err(bad("concavity.dims", "need positive entries"));
        }
        if self.concavity.s_values.is_empty() || self.concavity.s_values.contains(&0) {
            return Err(bad("concavity.s_values", "need positive entries"));
        }
        if self.check.pairs == 0 {
            return Err(bad("check.pairs", "must be at least 1"));
        }
        if self.check.s.is_some_and(|cs| cs == 0 || cs > d) {
            return Err(bad("check.s", format!("must lie in 1..={d}")));
        }
        for (key, v) in [("check.mu_scale", self.check.mu_scale), ("check.l_scale", self.check.l_scale)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(key, "must be nonnegative and finite"));
            }
        }
        Ok(())
    }

    pub fn instance_spec(&self) -> Result<InstanceSpec, HarnessError> {
        let mut design = DesignSpec::new(self.n(), self.design.d, self.design.omega)?;
        design.column_normalize = self.design.column_normalize;
        let noise = match self.noise.family {
            Family::Linear => NoiseSpec::linear(self.noise.sigma)?,
            Family::Logistic => NoiseSpec::logistic(),
        };
        Ok(InstanceSpec {
            design,
            truth: TruthSpec::new(self.design.d, self.truth.s_star)?,
            noise,
        })
    }

    pub fn operator(&self) -> Result<ThresholdSpec, HarnessError> {
        Ok(ThresholdSpec::new(self.run.operator, self.s())?)
    }

    pub fn step_choice(&self) -> StepChoice {
        match (self.run.step_rule, self.run.fixed_gamma) {
            (StepKind::SparsePolyak, _) => StepChoice::SparsePolyak {
                ht_width: self.ht_width(),
            },
            (StepKind::ClassicPolyak, _) => StepChoice::ClassicPolyak,
            (StepKind::Fixed, Some(gamma)) => StepChoice::Fixed { gamma },
            (StepKind::Fixed, None) => StepChoice::FixedLhat,
        }
    }

    pub fn grid_setup(&self) -> Result<GridSetup, HarnessError> {
        Ok(GridSetup {
            instance: self.instance_spec()?,
            step: self.step_choice(),
            max_iters: self.run.max_iters,
            operators: vec![ThresholdKind::Ht, ThresholdKind::Rt],
        })
    }

    pub fn sweep_setup(&self) -> Result<SweepSetup, HarnessError> {
        Ok(SweepSetup {
            dims: self.sweep.dims.clone(),
            s_star: self.truth.s_star,
            noise: self.instance_spec()?.noise,
            omega: self.design.omega,
            n_factor: self.design.n_factor,
            column_normalize: self.design.column_normalize,
            operator: self.operator()?,
            seeds: self.seeds.clone(),
            max_iters: self.run.max_iters,
        })
    }
}
