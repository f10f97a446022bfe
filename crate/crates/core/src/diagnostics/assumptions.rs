//! Sampling checks of restricted curvature inequalities.
//!
//! Each check evaluates the Bregman divergence
//! `D(t1, t2) = f(t1) - f(t2) - <grad f(t2), t1 - t2>` on random pairs and
//! compares it with the claimed bound. Pairs come from a fixed mixture, one
//! quarter each:
//!
//! 0. two `s`-sparse points on a shared support, separation scaled by 0.1
//! 1. the same with separation scaled by 3
//! 2. a dense point against an `s`-sparse point
//! 3. two dense points

use ndarray::Array1;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveModel, ParamVector};
use crate::rng::{substream, Purpose};
use crate::synthdata::RegularityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    #[serde(rename = "RSC")]
    Rsc,
    #[serde(rename = "RSS")]
    Rss,
    #[serde(rename = "WeakRSC")]
    WeakRsc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub pairs_tested: usize,
    pub violations: usize,
    /// Smallest slack seen; negative when some pair violates the bound.
    pub worst_margin: f64,
}

pub fn check_rsc(model: &ObjectiveModel, params: &RegularityParams, pairs: usize, seed: u64) -> Result<AssumptionReport> {
    check(model, params, pairs, seed, Assumption::Rsc)
}

pub fn check_rss(model: &ObjectiveModel, params: &RegularityParams, pairs: usize, seed: u64) -> Result<AssumptionReport> {
    check(model, params, pairs, seed, Assumption::Rss)
}

pub fn check_weak_rsc(
    model: &ObjectiveModel,
    params: &RegularityParams,
    pairs: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    check(model, params, pairs, seed, Assumption::WeakRsc)
}

fn sparse_point(rng: &mut ChaCha8Rng, support: &[usize], d: usize, scale: f64) -> Array1<f64> {
    let mut v = Array1::zeros(d);
    for &j in support {
        v[j] = scale * rng.sample::<f64, _>(StandardNormal);
    }
    v
}

fn dense_point(rng: &mut ChaCha8Rng, d: usize) -> Array1<f64> {
    Array1::from_shape_fn(d, |_| rng.sample(StandardNormal))
}

fn draw_pair(rng: &mut ChaCha8Rng, regime: usize, d: usize, s: usize) -> (ParamVector, ParamVector) {
    let s = s.clamp(1, d);
    let support = sample(rng, d, s).into_vec();
    let (t1, t2) = match regime {
        0 | 1 => {
            let base = sparse_point(rng, &support, d, 1.0);
            let scale = if regime == 0 { 0.1 } else { 3.0 };
            let step = sparse_point(rng, &support, d, scale);
            (&base + &step, base)
        }
        2 => (dense_point(rng, d), sparse_point(rng, &support, d, 1.0)),
        _ => (dense_point(rng, d), dense_point(rng, d)),
    };
    (t1.into(), t2.into())
}

fn margin(model: &ObjectiveModel, params: &RegularityParams, which: Assumption, t1: &ParamVector, t2: &ParamVector) -> Result<(f64, f64)> {
    let f1 = model.value(t1)?;
    let (f2, g2) = model.value_and_gradient(t2)?;
    let delta = &t1.values() - &t2.values();
    let bregman = f1 - f2 - g2.dot(&delta);
    let l2_sq = delta.dot(&delta);
    let l1 = delta.iter().map(|v| v.abs()).sum::<f64>();
    let l1_sq = l1 * l1;
    let slack = match which {
        Assumption::Rsc => bregman - (0.5 * params.mu * l2_sq - 0.5 * params.tau * l1_sq),
        Assumption::Rss => 0.5 * params.l * l2_sq + 0.5 * params.tau * l1_sq - bregman,
        Assumption::WeakRsc => {
            let bound = if l2_sq <= 1.0 {
                0.5 * params.mu * l2_sq - 0.5 * params.tau * l1_sq
            } else {
                l2_sq.sqrt() * (0.5 * params.mu - 0.5 * params.tau * l1_sq / l2_sq)
            };
            bregman - bound
        }
    };
    // rounding in f1 - f2 scales with the function values
    let noise = 1e-9 * (1.0 + f1.abs() + f2.abs());
    Ok((slack, noise))
}

fn check(
    model: &ObjectiveModel,
    params: &RegularityParams,
    pairs: usize,
    seed: u64,
    which: Assumption,
) -> Result<AssumptionReport> {
    if pairs == 0 {
        return Err(Error::invalid("need at least one pair"));
    }
    let d = model.dim();
    let (violations, worst) = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Purpose::AssumptionPairs, i as u64);
            let (t1, t2) = draw_pair(&mut rng, i % 4, d, params.s);
            let (slack, noise) = margin(model, params, which, &t1, &t2)?;
            Ok::<_, Error>((usize::from(slack < -noise), slack))
        })
        .try_reduce(|| (0, f64::INFINITY), |a, b| Ok((a.0 + b.0, a.1.min(b.1))))?;
    Ok(AssumptionReport {
        assumption: which,
        pairs_tested: pairs,
        violations,
        worst_margin: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Dataset, Family};
    use crate::synthdata::{DesignSpec, Instance, InstanceSpec, NoiseSpec, TruthSpec};

    fn instance(family: Family) -> Instance {
        let noise = match family {
            Family::Linear => NoiseSpec::linear(0.5).unwrap(),
            Family::Logistic => NoiseSpec::logistic(),
        };
        let spec = InstanceSpec {
            design: DesignSpec::new(80, 30, 0.5).unwrap(),
            truth: TruthSpec::new(30, 3).unwrap(),
            noise,
        };
        Instance::generate(spec, 1).unwrap()
    }

    #[test]
    fn zero_constants_hold_by_convexity() {
        for family in [Family::Linear, Family::Logistic] {
            let inst = instance(family);
            let params = RegularityParams::new(0.0, 0.0, 0.0, 5);
            for report in [
                check_rsc(&inst.model, &params, 400, 3).unwrap(),
                check_weak_rsc(&inst.model, &params, 400, 3).unwrap(),
            ] {
                assert_eq!(report.violations, 0, "{family:?} {report:?}");
                assert!(report.violations <= report.pairs_tested);
            }
        }
    }

    #[test]
    fn false_constants_are_caught() {
        let inst = instance(Family::Linear);
        let params = RegularityParams::new(50.0, 0.01, 0.0, 5);
        assert!(check_rsc(&inst.model, &params, 200, 3).unwrap().violations > 0);
        assert!(check_rss(&inst.model, &params, 200, 3).unwrap().violations > 0);
        assert!(check_rsc(&inst.model, &params, 200, 3).unwrap().worst_margin < 0.0);
    }

    #[test]
    fn report_is_deterministic() {
        let inst = instance(Family::Logistic);
        let params = RegularityParams::new(0.1, 1.0, 0.01, 4);
        let a = check_weak_rsc(&inst.model, &params, 100, 9).unwrap();
        let b = check_weak_rsc(&inst.model, &params, 100, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_pairs_rejected() {
        let x = ndarray::array![[1.0]];
        let model = ObjectiveModel::new(Family::Linear, Dataset::new(x, ndarray::array![1.0]).unwrap()).unwrap();
        assert!(check_rsc(&model, &RegularityParams::new(0.0, 0.0, 0.0, 1), 0, 0).is_err());
    }
}
