//! Empirical relative concavity of a thresholding operator.
//!
//! For an operator `phi` and an `s_star`-sparse target `y`, the ratio
//!
//! ```text
//! <y - phi(z), z - phi(z)> / ||y - phi(z)||^2
//! ```
//!
//! is zero or negative for projections onto convex sets. Thresholding is not
//! such a projection, and the supremum of this ratio over all pairs measures
//! how much a thresholding step can push an iterate away from a sparse target.
//!
//! The oracle below lower-bounds that supremum. Every reported value comes from
//! an explicit `(y, z)` pair. The pairs come from three sources:
//!
//! * random `z` from several families (Gaussian, near-tied magnitudes,
//!   heavy-tailed, quantized) paired with a random sparse `y`;
//! * the same `z` paired with the best `y` on a random support. For fixed `z`
//!   and a fixed support `T` of `y`, the ratio is maximized in closed form by
//!   moving `y` along `z - phi(z)` restricted to `T`;
//! * a deterministic set of boundary-tie `z` vectors with every support `T`
//!   enumerated. The supremum is approached near magnitude ties at the
//!   selection boundary, which random sampling rarely hits.

use ndarray::Array1;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ThresholdSpec;
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// Supports enumerated exhaustively for structured pairs when
/// `C(dim, s_star)` is at most this; otherwise a random sample of that size.
const MAX_ENUMERATED_SUPPORTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityEstimate {
    pub operator: ThresholdSpec,
    pub s_star: usize,
    pub dim: usize,
    /// Largest ratio observed over all evaluated pairs.
    pub estimate: f64,
    /// `None` when the operator has no finite bound at this `s_star`.
    pub theoretical_bound: Option<f64>,
    pub trials: usize,
    /// Number of `(y, z)` pairs whose ratio was evaluated.
    pub pairs: usize,
}

impl ConcavityEstimate {
    /// `true` if the estimate does not exceed the bound by more than `slack`.
    /// Vacuously true when no bound is defined.
    pub fn within_bound(&self, slack: f64) -> bool {
        self.theoretical_bound
            .is_none_or(|b| self.estimate <= b + slack)
    }
}

pub fn empirical_relative_concavity(
    op: ThresholdSpec,
    s_star: usize,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Result<ConcavityEstimate> {
    if s_star < 1 {
        return Err(Error::invalid("s_star must be at least 1"));
    }
    if s_star > op.s {
        return Err(Error::invalid(format!(
            "s_star ({s_star}) exceeds operator budget s ({})",
            op.s
        )));
    }
    if op.s > dim {
        return Err(Error::invalid(format!(
            "operator budget s ({}) exceeds dimension ({dim})",
            op.s
        )));
    }
    if trials < 1 {
        return Err(Error::invalid("trials must be at least 1"));
    }

    let oracle = Oracle { op, s_star, dim };

    let (random_best, random_pairs) = (0..trials)
        .into_par_iter()
        .map(|i| oracle.random_trial(seed, i as u64))
        .reduce(|| Best::EMPTY, Best::merge)
        .into_parts();

    let (structured_best, structured_pairs) = oracle.structured(seed).into_parts();

    Ok(ConcavityEstimate {
        operator: op,
        s_star,
        dim,
        estimate: random_best.max(structured_best).max(0.0),
        theoretical_bound: op.concavity_bound(s_star),
        trials,
        pairs: random_pairs + structured_pairs,
    })
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    pairs: usize,
}

impl Best {
    const EMPTY: Best = Best {
        value: f64::NEG_INFINITY,
        pairs: 0,
    };

    fn record(&mut self, ratio: Option<f64>) {
        if let Some(r) = ratio {
            self.pairs += 1;
            self.value = self.value.max(r);
        }
    }

    fn merge(a: Best, b: Best) -> Best {
        Best {
            value: a.value.max(b.value),
            pairs: a.pairs + b.pairs,
        }
    }

    fn into_parts(self) -> (f64, usize) {
        (self.value, self.pairs)
    }
}

struct Oracle {
    op: ThresholdSpec,
    s_star: usize,
    dim: usize,
}

impl Oracle {
    fn project(&self, z: &Array1<f64>) -> Array1<f64> {
        self.op
            .apply(z.view())
            .expect("oracle inputs are finite and non-empty")
    }

    /// The concavity ratio, or `None` when `y == phi(z)`.
    fn ratio(y: &Array1<f64>, z: &Array1<f64>, p: &Array1<f64>) -> Option<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..z.len() {
            let u = y[i] - p[i];
            num += u * (z[i] - p[i]);
            den += u * u;
        }
        (den > 0.0).then(|| num / den)
    }

    /// Best `y` supported on `support` for fixed `z`. Writing `u = y - p`,
    /// `u` is pinned to `-p` off the support and free on it, so the ratio is
    /// `(<u_T, r_T> + a) / (|u_T|^2 + b)` with `r = z - p`. The maximizer is
    /// `u_T = t r_T / |r_T|` with `t = (-a + sqrt(a^2 + |r_T|^2 b)) / |r_T|`.
    fn best_y_on(&self, z: &Array1<f64>, p: &Array1<f64>, support: &[usize]) -> Option<Array1<f64>> {
        let mut on = vec![false; self.dim];
        for &i in support {
            on[i] = true;
        }
        let mut a = 0.0;
        let mut b = 0.0;
        let mut rho_sq = 0.0;
        for i in 0..self.dim {
            let r = z[i] - p[i];
            if on[i] {
                rho_sq += r * r;
            } else {
                a -= p[i] * r;
                b += p[i] * p[i];
            }
        }
        if b <= 0.0 {
            // ratio is unbounded (rho > 0) or identically zero along this support
            return None;
        }
        let mut y = Array1::zeros(self.dim);
        if rho_sq > 0.0 {
            let rho = rho_sq.sqrt();
            let t = (-a + (a * a + rho_sq * b).sqrt()) / rho;
            for &i in support {
                y[i] = p[i] + t * (z[i] - p[i]) / rho;
            }
        } else {
            for &i in support {
                y[i] = p[i];
            }
        }
        Some(y)
    }

    fn random_z(&self, rng: &mut ChaCha8Rng, family: u64) -> Array1<f64> {
        let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
        match family % 4 {
            0 => Array1::from_shape_fn(self.dim, |_| rng.sample(StandardNormal)),
            1 => Array1::from_shape_fn(self.dim, |_| {
                let eps: f64 = rng.random();
                sign(rng) * (1.0 + 1e-3 * eps)
            }),
            2 => Array1::from_shape_fn(self.dim, |_| {
                let g: f64 = rng.sample(StandardNormal);
                let h: f64 = rng.sample(StandardNormal);
                g * h.exp()
            }),
            _ => Array1::from_shape_fn(self.dim, |_| {
                let level = rng.random_range(0..4u32) as f64;
                sign(rng) * level / 2.0
            }),
        }
    }

    fn random_support(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        sample(rng, self.dim, self.s_star).into_vec()
    }

    fn random_trial(&self, seed: u64, trial: u64) -> Best {
        let mut rng = substream(seed, Purpose::Concavity, trial);
        let mut best = Best::EMPTY;
        let z = self.random_z(&mut rng, trial);
        let p = self.project(&z);

        let support = self.random_support(&mut rng);
        let scale: f64 = rng.sample::<f64, _>(StandardNormal).exp();
        let mut y = Array1::zeros(self.dim);
        for &i in &support {
            y[i] = scale * rng.sample::<f64, _>(StandardNormal);
        }
        best.record(Self::ratio(&y, &z, &p));

        let support = self.random_support(&mut rng);
        if let Some(y) = self.best_y_on(&z, &p, &support) {
            best.record(Self::ratio(&y, &z, &p));
        }
        best
    }

    fn structured_z(&self) -> Vec<Array1<f64>> {
        let (dim, s) = (self.dim, self.op.s);
        let mut out = vec![Array1::zeros(dim), Array1::ones(dim)];
        out.push(Array1::from_shape_fn(dim, |i| if i % 2 == 0 { 1.0 } else { -1.0 }));
        for below in [0.5, 0.9, 1.0 - 1e-3, 1.0 - 1e-6, 1.0 - 1e-9] {
            out.push(Array1::from_shape_fn(dim, |i| if i < s { 1.0 } else { below }));
            // tied block just outside the top-s, zeros beyond it
            out.push(Array1::from_shape_fn(dim, |i| {
                if i < s {
                    1.0
                } else if i < s + self.s_star {
                    below
                } else {
                    0.0
                }
            }));
        }
        // decreasing magnitudes crossing the boundary
        out.push(Array1::from_shape_fn(dim, |i| 1.0 / (1.0 + i as f64)));
        out
    }

    fn structured(&self, seed: u64) -> Best {
        let mut best = Best::EMPTY;
        let supports = self.structured_supports(seed);
        for z in self.structured_z() {
            let p = self.project(&z);
            for support in &supports {
                if let Some(y) = self.best_y_on(&z, &p, support) {
                    best.record(Self::ratio(&y, &z, &p));
                }
            }
        }
        best
    }

    fn structured_supports(&self, seed: u64) -> Vec<Vec<usize>> {
        let total = binomial(self.dim, self.s_star);
        if total <= MAX_ENUMERATED_SUPPORTS as u128 {
            combinations(self.dim, self.s_star)
        } else {
            let mut rng = substream(seed, Purpose::Concavity, u32::MAX as u64);
            (0..MAX_ENUMERATED_SUPPORTS)
                .map(|_| self.random_support(&mut rng))
                .collect()
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // advance the rightmost index that still has room
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                break;
            }
        }
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}
