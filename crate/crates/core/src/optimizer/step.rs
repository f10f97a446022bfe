use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::RegularityParams;
use crate::thresholding::ht_norm_sq;

/// Width of the hard-thresholded gradient in the sparse Polyak denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HtWidth {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "2s")]
    TwoS,
}

impl HtWidth {
    pub fn resolve(self, s: usize) -> usize {
        match self {
            HtWidth::S => s,
            HtWidth::TwoS => 2 * s,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HtWidth::S => "s",
            HtWidth::TwoS => "2s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// `max(f - f_hat, 0) / (5 |HT_w(grad)|^2)`.
    SparsePolyak { f_hat: f64, ht_width: HtWidth },
    /// `max(f - f_hat, 0) / |grad|^2`.
    ClassicPolyak { f_hat: f64 },
    Fixed { gamma: f64 },
}

impl StepRule {
    pub fn f_hat(&self) -> Option<f64> {
        match *self {
            StepRule::SparsePolyak { f_hat, .. } | StepRule::ClassicPolyak { f_hat } => Some(f_hat),
            StepRule::Fixed { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Fixed { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid(format!("fixed step must be positive and finite, got {gamma}")))
            }
            StepRule::SparsePolyak { f_hat, .. } | StepRule::ClassicPolyak { f_hat } if !f_hat.is_finite() => {
                Err(Error::invalid("target value f_hat must be finite"))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn polyak_ratio(gap: f64, denominator: f64) -> Option<f64> {
    let gap = gap.max(0.0);
    if denominator > 0.0 {
        Some(gap / denominator)
    } else if gap > 0.0 {
        None
    } else {
        Some(0.0)
    }
}

/// Sparse Polyak step. `None` signals a zero thresholded gradient with a
/// positive gap: no finite step reaches `f_hat`, so the run must stop.
pub fn sparse_polyak_step(f_val: f64, f_hat: f64, grad: ArrayView1<f64>, ht_width: usize) -> Result<Option<f64>> {
    if grad.len() < ht_width {
        return Err(Error::invalid(format!(
            "thresholding width {ht_width} exceeds gradient length {}",
            grad.len()
        )));
    }
    let denom = 5.0 * ht_norm_sq(grad, ht_width)?;
    Ok(polyak_ratio(f_val - f_hat, denom))
}

/// Classic Polyak step on the full gradient. Same `None` convention as
/// [`sparse_polyak_step`].
pub fn classic_polyak_step(f_val: f64, f_hat: f64, grad: ArrayView1<f64>) -> Option<f64> {
    polyak_ratio(f_val - f_hat, grad.dot(&grad))
}

/// Fixed step `1 / L_hat` with `L_hat = lambda_max (3/4 + (2s + s_star) / (10 s))`.
pub fn fixed_step_lhat(lambda_max: f64, s: usize, s_star: usize) -> Result<f64> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::invalid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    if s == 0 || s_star == 0 || s_star > s {
        return Err(Error::invalid(format!("need s >= s_star >= 1, got s={s}, s_star={s_star}")));
    }
    let (s, s_star) = (s as f64, s_star as f64);
    let l_hat = lambda_max * (0.75 + (2.0 * s + s_star) / (10.0 * s));
    Ok(1.0 / l_hat)
}

/// Squared radius `36 |HT_s(grad f(theta_hat))|^2 / mu_bar^2` below which
/// contraction toward `theta_hat` is no longer guaranteed.
pub fn theoretical_floor(regularity: &RegularityParams, grad_at_truth_ht_norm: f64) -> Result<f64> {
    let mu_bar = regularity.mu_bar();
    if mu_bar <= 0.0 {
        return Err(Error::invalid(format!(
            "effective curvature mu_bar = {mu_bar} is not positive; floor undefined"
        )));
    }
    Ok(36.0 * grad_at_truth_ht_norm * grad_at_truth_ht_norm / (mu_bar * mu_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn sparse_polyak_examples() {
        // |HT_2(g)|^2 = 4
        let g = array![0.0, 2.0, 0.0, 0.0];
        assert_eq!(sparse_polyak_step(10.0, 0.0, g.view(), 2).unwrap(), Some(0.5));
        assert_eq!(sparse_polyak_step(1.0, 3.0, array![1.0, -1.0].view(), 1).unwrap(), Some(0.0));
        assert_eq!(sparse_polyak_step(2.0, 0.0, array![0.0, 0.0].view(), 1).unwrap(), None);
        assert_eq!(sparse_polyak_step(0.0, 0.0, array![0.0, 0.0].view(), 1).unwrap(), Some(0.0));
    }

    #[test]
    fn sparse_polyak_uses_only_top_entries() {
        let g = array![3.0, -4.0, 1.0];
        // top-2 norm^2 = 25
        assert_eq!(sparse_polyak_step(25.0, 0.0, g.view(), 2).unwrap(), Some(0.2));
        assert!(sparse_polyak_step(1.0, 0.0, g.view(), 4).is_err());
    }

    #[test]
    fn classic_polyak_examples() {
        let g = array![2.0, 0.0];
        assert_eq!(classic_polyak_step(10.0, 0.0, g.view()), Some(2.5));
        assert_eq!(classic_polyak_step(0.0, 0.0, array![1.0].view()), Some(0.0));
        assert_eq!(classic_polyak_step(1.0, 0.0, array![0.0].view()), None);
    }

    #[test]
    fn fixed_step_examples() {
        assert_abs_diff_eq!(fixed_step_lhat(1.0, 500, 300).unwrap(), 1.0 / 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(fixed_step_lhat(1.0, 500, 300).unwrap(), 0.990099, epsilon = 1e-6);
        assert_abs_diff_eq!(fixed_step_lhat(2.0, 7, 7).unwrap(), 1.0 / 2.1, epsilon = 1e-15);
        assert!(fixed_step_lhat(0.0, 5, 5).is_err());
        assert!(fixed_step_lhat(1.0, 3, 5).is_err());
    }

    #[test]
    fn floor_examples() {
        let reg = RegularityParams::new(6.0, 10.0, 0.0, 5);
        assert_abs_diff_eq!(theoretical_floor(&reg, 1.0).unwrap(), 1.0);
        assert_eq!(theoretical_floor(&reg, 0.0).unwrap(), 0.0);
        let bad = RegularityParams::new(0.1, 10.0, 1.0, 5);
        assert!(theoretical_floor(&bad, 1.0).is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(StepRule::Fixed { gamma: 0.0 }.validate().is_err());
        assert!(StepRule::ClassicPolyak { f_hat: f64::NAN }.validate().is_err());
        assert!(StepRule::SparsePolyak { f_hat: 0.0, ht_width: HtWidth::S }.validate().is_ok());
    }
}
