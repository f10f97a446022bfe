//! Sparsifying operators.
//!
//! Both operators keep the `s` largest-magnitude coordinates of their input.
//! Hard thresholding leaves the kept values untouched. Reciprocal thresholding
//! shrinks each kept value toward half its magnitude, by an amount controlled
//! by `tau`, the largest magnitude that was discarded:
//!
//! ```text
//! out_i = sign(v_i) * (|v_i| / 2 + sqrt(|v_i|^2 - tau^2) / 2)
//! ```
//!
//! Selection is deterministic. Magnitude ties go to the lower index, so the
//! same input always produces the same support.

mod concavity;

pub use concavity::{empirical_relative_concavity, ConcavityEstimate};

use std::cmp::Ordering;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// Hard thresholding.
    Ht,
    /// Reciprocal thresholding.
    Rt,
}

impl ThresholdKind {
    pub fn label(self) -> &'static str {
        match self {
            ThresholdKind::Ht => "HT",
            ThresholdKind::Rt => "RT",
        }
    }
}

impl std::fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Which operator, at which sparsity budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub kind: ThresholdKind,
    pub s: usize,
}

impl ThresholdSpec {
    pub fn new(kind: ThresholdKind, s: usize) -> Result<Self> {
        if s < 1 {
            return Err(Error::invalid("sparsity budget s must be at least 1"));
        }
        Ok(ThresholdSpec { kind, s })
    }

    pub fn ht(s: usize) -> Result<Self> {
        Self::new(ThresholdKind::Ht, s)
    }

    pub fn rt(s: usize) -> Result<Self> {
        Self::new(ThresholdKind::Rt, s)
    }

    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        match self.kind {
            ThresholdKind::Ht => hard_threshold(v, self.s),
            ThresholdKind::Rt => reciprocal_threshold(v, self.s),
        }
    }

    /// Known upper bound on the relative concavity of this operator against
    /// `s_star`-sparse targets. `None` where no finite bound exists (RT with
    /// `s_star >= s`).
    pub fn concavity_bound(&self, s_star: usize) -> Option<f64> {
        if s_star > self.s {
            return None;
        }
        let ratio = s_star as f64 / self.s as f64;
        match self.kind {
            ThresholdKind::Ht => Some(ratio.sqrt() / 2.0),
            ThresholdKind::Rt => {
                if s_star >= self.s {
                    None
                } else {
                    Some(ratio / f64::min(1.0, 4.0 * (1.0 - ratio)))
                }
            }
        }
    }
}

impl std::fmt::Display for ThresholdSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(s={})", self.kind, self.s)
    }
}

fn check_input(v: ArrayView1<f64>, s: usize) -> Result<()> {
    if s < 1 {
        return Err(Error::invalid("sparsity budget s must be at least 1"));
    }
    if v.is_empty() {
        return Err(Error::invalid("cannot threshold an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("thresholding input"));
    }
    Ok(())
}

/// Larger magnitude first, then lower index.
#[inline]
fn rank_order(v: &ArrayView1<f64>, a: usize, b: usize) -> Ordering {
    v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b))
}

/// Partitions `0..len` so the first `s` entries are the top-`s` indices and,
/// when `s < len`, entry `s` is the next one in rank order.
fn partition_by_rank(v: &ArrayView1<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    if s < idx.len() {
        idx.select_nth_unstable_by(s, |&a, &b| rank_order(v, a, b));
    }
    idx
}

/// Indices of the `min(s, len)` largest-magnitude entries, ascending.
pub fn top_s_support(v: ArrayView1<f64>, s: usize) -> Result<Vec<usize>> {
    check_input(v, s)?;
    let mut idx = partition_by_rank(&v, s);
    idx.truncate(s.min(v.len()));
    idx.sort_unstable();
    Ok(idx)
}

pub fn hard_threshold(v: ArrayView1<f64>, s: usize) -> Result<Array1<f64>> {
    let support = top_s_support(v, s)?;
    let mut out = Array1::zeros(v.len());
    for i in support {
        out[i] = v[i];
    }
    Ok(out)
}

pub fn reciprocal_threshold(v: ArrayView1<f64>, s: usize) -> Result<Array1<f64>> {
    check_input(v, s)?;
    if s >= v.len() {
        return Ok(v.to_owned());
    }
    let idx = partition_by_rank(&v, s);
    let tau = v[idx[s]].abs();
    let mut out = Array1::zeros(v.len());
    for &i in &idx[..s] {
        let mag = v[i].abs();
        if mag == 0.0 {
            continue;
        }
        // scaled by mag so that huge entries do not overflow when squared
        let r = tau / mag;
        debug_assert!(r <= 1.0, "kept magnitude {mag} below discarded magnitude {tau}");
        out[i] = v[i].signum() * mag * (0.5 + 0.5 * ((1.0 - r) * (1.0 + r)).sqrt());
    }
    Ok(out)
}

/// Squared norm of `hard_threshold(v, s)`, without allocating the output.
pub fn ht_norm_sq(v: ArrayView1<f64>, s: usize) -> Result<f64> {
    Ok(top_s_support(v, s)?.iter().map(|&i| v[i] * v[i]).sum())
}
