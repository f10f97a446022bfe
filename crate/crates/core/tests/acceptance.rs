//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use spolyak::diagnostics::{
    check_rsc, check_rss, check_weak_rsc, compare_operators, median, plateau, run_cell, GridResult, GridSetup,
    StepChoice,
};
use spolyak::objectives::{Dataset, Family, ObjectiveModel, ParamVector};
use spolyak::optimizer::trace::write_trace_csv;
use spolyak::optimizer::{run, HtWidth, RunConfig, RunTrace, StepRule};
use spolyak::rng::{substream, Purpose};
use spolyak::synthdata::{
    compute_regularity, generate_design, generate_truth, sample_size, DesignSpec, Instance, InstanceSpec, NoiseSpec,
    RegularityParams, TruthSpec,
};
use spolyak::thresholding::{
    empirical_relative_concavity, hard_threshold, reciprocal_threshold, top_s_support, ThresholdKind, ThresholdSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Traces kept from the first pass of each criterion, replayed by the
/// determinism check.
type Replays = Vec<(String, Box<dyn Fn() -> RunTrace>, Vec<u8>)>;

fn csv_bytes(trace: &RunTrace) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace).unwrap();
    buf
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

// ---------------------------------------------------------------- 1

fn operator_suite() -> Outcome {
    let mut failures = Vec::new();
    let v = |xs: &[f64]| Array1::from(xs.to_vec());

    if top_s_support(v(&[3.0, -5.0, 2.0, 0.5]).view(), 2).unwrap() != vec![0, 1] {
        failures.push("top_s distinct");
    }
    if top_s_support(v(&[2.0, 2.0, 2.0]).view(), 2).unwrap() != vec![0, 1] {
        failures.push("top_s ties");
    }
    if top_s_support(v(&[7.0]).view(), 3).unwrap() != vec![0] {
        failures.push("top_s clamp");
    }
    if hard_threshold(v(&[3.0, -5.0, 2.0, 0.5]).view(), 2).unwrap() != v(&[3.0, -5.0, 0.0, 0.0]) {
        failures.push("HT keep two");
    }
    if hard_threshold(v(&[1.0, 2.0]).view(), 2).unwrap() != v(&[1.0, 2.0]) {
        failures.push("HT identity");
    }
    if hard_threshold(v(&[0.0, 0.0, 0.0]).view(), 1).unwrap() != v(&[0.0, 0.0, 0.0]) {
        failures.push("HT zero");
    }
    let close = |a: &Array1<f64>, b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    let rt = reciprocal_threshold(v(&[3.0, 2.0, 1.0]).view(), 2).unwrap();
    if !close(&rt, &[1.5 + 8f64.sqrt() / 2.0, 1.0 + 3f64.sqrt() / 2.0, 0.0])
        || !close(&rt, &[2.914213562373095, 1.866025403784439, 0.0])
    {
        failures.push("RT tau=1");
    }
    if !close(&reciprocal_threshold(v(&[2.0, 2.0, 2.0]).view(), 2).unwrap(), &[1.0, 1.0, 0.0]) {
        failures.push("RT ties");
    }
    if reciprocal_threshold(v(&[5.0, -4.0]).view(), 2).unwrap() != v(&[5.0, -4.0]) {
        failures.push("RT identity");
    }

    let count = 100_000u64;
    let mut violations = 0usize;
    for i in 0..count {
        let mut rng = substream(1, Purpose::Test, i);
        let dim = rng.random_range(1..=40usize);
        let s = rng.random_range(1..=dim + 2);
        let family = i % 4;
        let x = Array1::from_shape_fn(dim, |_| match family {
            0 => rng.sample::<f64, _>(StandardNormal),
            1 => rng.random_range(-3i32..=3) as f64,
            2 => {
                let z: f64 = rng.sample(StandardNormal);
                z.powi(3) * 10f64.powi(rng.random_range(-4..=4))
            }
            _ => {
                if rng.random::<f64>() < 0.5 {
                    0.0
                } else {
                    rng.sample(StandardNormal)
                }
            }
        });
        let ht = hard_threshold(x.view(), s).unwrap();
        let rt = reciprocal_threshold(x.view(), s).unwrap();
        let nnz = |a: &Array1<f64>| a.iter().filter(|v| **v != 0.0).count();
        let mut ok = nnz(&ht) <= s && nnz(&rt) <= s;
        ok &= hard_threshold(ht.view(), s).unwrap() == ht;
        for j in 0..dim {
            if ht[j] == 0.0 {
                ok &= rt[j] == 0.0;
            } else {
                let (a, b) = (rt[j].abs(), x[j].abs());
                ok &= a >= b / 2.0 && a <= b;
                ok &= rt[j] == 0.0 || rt[j].signum() == x[j].signum();
            }
        }
        ok &= rt.dot(&rt) <= ht.dot(&ht);
        if !ok {
            violations += 1;
        }
    }
    Outcome::new(
        failures.is_empty() && violations == 0,
        format!(
            "examples failed: {failures:?}; invariant violations: {violations} of {count} random vectors"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn concavity_certification() -> Outcome {
    let trials = 100_000;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut exceeded = Vec::new();
    let mut best_ht_fraction: f64 = 0.0;
    let mut min_pairs = usize::MAX;
    let mut cells = 0;
    for dim in 1..=8usize {
        for s in 1..=dim.min(4) {
            for s_star in 1..=s {
                for kind in [ThresholdKind::Ht, ThresholdKind::Rt] {
                    let op = ThresholdSpec::new(kind, s).unwrap();
                    let est = empirical_relative_concavity(op, s_star, dim, trials, 2024).unwrap();
                    cells += 1;
                    min_pairs = min_pairs.min(est.pairs);
                    if let Some(bound) = est.theoretical_bound {
                        worst_excess = worst_excess.max(est.estimate - bound);
                        if est.estimate > bound + 1e-9 {
                            exceeded.push(format!("{op} s*={s_star} dim={dim}: {} > {bound}", est.estimate));
                        }
                        if kind == ThresholdKind::Ht {
                            best_ht_fraction = best_ht_fraction.max(est.estimate / bound);
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        exceeded.is_empty() && best_ht_fraction >= 0.9 && min_pairs >= trials,
        format!(
            "{cells} cells, min pairs {min_pairs}, max(estimate - bound) = {worst_excess:.3e}, \
             best HT estimate/bound = {best_ht_fraction:.6}, exceeded: {exceeded:?}"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn gradient_correctness() -> Outcome {
    let mut worst: f64 = 0.0;
    for family in [Family::Linear, Family::Logistic] {
        for i in 0..100u64 {
            let mut rng = substream(3, Purpose::Test, i + if family == Family::Linear { 0 } else { 1000 });
            let n = rng.random_range(1..=20usize);
            let d = rng.random_range(1..=20usize);
            let x = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
            let y = Array1::from_shape_fn(n, |_| match family {
                Family::Linear => rng.sample::<f64, _>(StandardNormal),
                Family::Logistic => f64::from(rng.random::<bool>()),
            });
            let model = ObjectiveModel::new(family, Dataset::new(x, y).unwrap()).unwrap();
            let theta = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
            let g = model.gradient(&theta.clone().into()).unwrap();
            for j in 0..d {
                let h = 1e-6 * (1.0 + theta[j].abs());
                let mut plus = theta.clone();
                plus[j] += h;
                let mut minus = theta.clone();
                minus[j] -= h;
                let fd = (model.value(&plus.into()).unwrap() - model.value(&minus.into()).unwrap()) / (2.0 * h);
                worst = worst.max((g[j] - fd).abs() / g[j].abs().max(1.0));
            }
        }
    }
    Outcome::new(worst <= 1e-5, format!("worst relative error {worst:.3e} over 200 instances"))
}

// ---------------------------------------------------------------- 4

fn noiseless_model(seed: u64) -> (ObjectiveModel, ParamVector) {
    let (s_star, d) = (20, 1000);
    let design = DesignSpec::new(sample_size(8.0, s_star, d), d, 0.5).unwrap();
    let x = generate_design(&design, seed).unwrap();
    let truth = generate_truth(&TruthSpec::new(d, s_star).unwrap(), seed).unwrap();
    let y = x.dot(&truth.values());
    let model = ObjectiveModel::new(Family::Linear, Dataset::new(x, y).unwrap()).unwrap();
    (model, truth)
}

fn noiseless_run(seed: u64) -> RunTrace {
    let (model, truth) = noiseless_model(seed);
    let rule = StepRule::SparsePolyak {
        f_hat: 0.0,
        ht_width: HtWidth::S,
    };
    let config = RunConfig::new(&model, ThresholdSpec::ht(20).unwrap(), rule)
        .with_truth(&truth)
        .with_max_iters(500)
        .with_seed(seed);
    run(&config).unwrap()
}

fn noiseless_recovery(replays: &mut Replays) -> Outcome {
    let mut recovered = 0;
    let mut lines = Vec::new();
    for seed in 0..=10u64 {
        let trace = noiseless_run(seed);
        let last = trace.last();
        let err = last.error_sq.unwrap();
        let ok = last.f_value < 1e-10 && err < 1e-8 && last.iter <= 500;
        if ok {
            recovered += 1;
        } else {
            lines.push(format!("seed {seed}: f={:.2e} err={err:.2e} ({:?})", last.f_value, trace.status));
        }
        if seed == 0 {
            replays.push(("noiseless seed 0".into(), Box::new(move || noiseless_run(0)), csv_bytes(&trace)));
        }
    }
    Outcome::new(recovered == 11, format!("{recovered}/11 seeds recovered; misses: {lines:?}"))
}

// ---------------------------------------------------------------- 5

fn contraction_instance() -> InstanceSpec {
    let (s_star, d) = (20, 1000);
    InstanceSpec {
        design: DesignSpec::new(sample_size(5.0, s_star, d), d, 0.5).unwrap(),
        truth: TruthSpec::new(d, s_star).unwrap(),
        noise: NoiseSpec::linear(0.5).unwrap(),
    }
}

fn contraction_floor(replays: &mut Replays) -> Outcome {
    let spec = contraction_instance();
    let s_star = spec.truth.s_star;
    let grid: Vec<usize> = (3..=7).map(|k| ((s_star * k) as f64 / 3.0).round() as usize).collect();

    // plug-in constants; when mu_bar <= 0 the tau term is dropped
    let reg = compute_regularity(&spec.design, s_star).unwrap();
    let (kappa, tau_dropped) = match reg.kappa_bar() {
        Some(k) => (k, false),
        None => (RegularityParams { tau: 0.0, ..reg }.kappa_bar().unwrap(), true),
    };
    let wanted = (320.0 * kappa * s_star as f64).ceil() as usize;
    let s = grid.iter().copied().find(|&g| g >= wanted).unwrap_or(*grid.last().unwrap());
    let op = ThresholdSpec::rt(s).unwrap();
    let eta = op.concavity_bound(s_star).unwrap();
    let threshold = 1.0 - 1.0 / (80.0 * kappa);
    let radius_factor = 1.01 * (1.0 + 4.0 * eta);

    let mut above = 0usize;
    let mut contracted = 0usize;
    let mut confinement_breaks = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for seed in 0..=10u64 {
        let inst = Instance::generate(spec, seed).unwrap();
        let trace = run_cell(&inst, op, StepChoice::SparsePolyak { ht_width: HtWidth::S }, 500).unwrap();
        let errors = trace.error_series().unwrap();
        let level = plateau(&errors).unwrap();
        let radius = radius_factor * level;
        for t in 0..errors.len() - 1 {
            if errors[t] > radius {
                above += 1;
                let r = errors[t + 1] / errors[t];
                max_ratio = max_ratio.max(r);
                if r <= threshold {
                    contracted += 1;
                }
            }
        }
        if let Some(first) = errors.iter().position(|&e| e < level) {
            let worst = errors[first..].iter().copied().fold(0.0, f64::max);
            if worst > radius {
                confinement_breaks.push(format!("seed {seed}: {:.3} x plateau", worst / level));
            }
        }
        if seed == 0 {
            let replay = move || {
                let inst = Instance::generate(spec, 0).unwrap();
                run_cell(&inst, op, StepChoice::SparsePolyak { ht_width: HtWidth::S }, 500).unwrap()
            };
            replays.push(("contraction RT seed 0".into(), Box::new(replay), csv_bytes(&trace)));
        }
    }
    let fraction = contracted as f64 / above.max(1) as f64;
    Outcome::new(
        above > 0 && fraction >= 0.95 && confinement_breaks.is_empty(),
        format!(
            "kappa_plugin={kappa:.3} (tau dropped: {tau_dropped}), 320*kappa*s*={wanted} -> s={s}, eta={eta:.4}, \
             r_max allowed {threshold:.6}; {contracted}/{above} above-plateau steps contract ({:.1}%), \
             max ratio {max_ratio:.4}; confinement breaks: {confinement_breaks:?}",
            100.0 * fraction
        ),
    )
}

// ---------------------------------------------------------------- 6 and 7

struct SweepCell {
    sparse_plateau: f64,
    sparse_iters: usize,
    classic_step: f64,
}

fn sweep_spec(d: usize) -> InstanceSpec {
    InstanceSpec {
        design: DesignSpec::new(sample_size(5.0, 20, d), d, 0.5).unwrap(),
        truth: TruthSpec::new(d, 20).unwrap(),
        noise: NoiseSpec::linear(0.5).unwrap(),
    }
}

const SWEEP_ITERS: usize = 400;

fn sweep_runs(d: usize, seed: u64) -> (RunTrace, RunTrace) {
    let inst = Instance::generate(sweep_spec(d), seed).unwrap();
    let op = ThresholdSpec::rt(40).unwrap();
    let sparse = run_cell(&inst, op, StepChoice::SparsePolyak { ht_width: HtWidth::S }, SWEEP_ITERS).unwrap();
    let classic = run_cell(&inst, op, StepChoice::ClassicPolyak, SWEEP_ITERS).unwrap();
    (sparse, classic)
}

fn sweep(replays: &mut Replays) -> BTreeMap<usize, Vec<SweepCell>> {
    let mut out = BTreeMap::new();
    for d in [250, 500, 1000] {
        let mut cells = Vec::new();
        for seed in 0..=10u64 {
            let (sparse, classic) = sweep_runs(d, seed);
            let e = sparse.error_series().unwrap();
            let level = plateau(&e).unwrap();
            let iters = spolyak::diagnostics::iters_to_floor(&e, level).unwrap();
            let ce = classic.error_series().unwrap();
            let c_iters = spolyak::diagnostics::iters_to_floor(&ce, plateau(&ce).unwrap()).unwrap();
            let steps = classic.step_sizes();
            cells.push(SweepCell {
                sparse_plateau: level,
                sparse_iters: iters,
                classic_step: median(&steps[..c_iters.max(1)]).unwrap(),
            });
            if seed == 0 && d == 500 {
                replays.push((
                    "sweep classic d=500 seed 0".into(),
                    Box::new(|| sweep_runs(500, 0).1),
                    csv_bytes(&classic),
                ));
            }
        }
        out.insert(d, cells);
    }
    out
}

fn precision_scaling(data: &BTreeMap<usize, Vec<SweepCell>>) -> Outcome {
    let medians: Vec<(usize, f64)> = data
        .iter()
        .map(|(&d, cells)| (d, median(&cells.iter().map(|c| c.sparse_plateau).collect::<Vec<_>>()).unwrap()))
        .collect();
    let hi = medians.iter().map(|m| m.1).fold(f64::MIN, f64::max);
    let lo = medians.iter().map(|m| m.1).fold(f64::MAX, f64::min);
    Outcome::new(
        hi / lo <= 3.0,
        format!("median plateau error^2 by d: {medians:.4?}; max/min = {:.3}", hi / lo),
    )
}

fn rate_invariance(data: &BTreeMap<usize, Vec<SweepCell>>) -> Outcome {
    let iters: Vec<(usize, f64)> = data
        .iter()
        .map(|(&d, cells)| {
            (d, median(&cells.iter().map(|c| c.sparse_iters as f64).collect::<Vec<_>>()).unwrap())
        })
        .collect();
    let steps: Vec<(usize, f64)> = data
        .iter()
        .map(|(&d, cells)| (d, median(&cells.iter().map(|c| c.classic_step).collect::<Vec<_>>()).unwrap()))
        .collect();
    let hi = iters.iter().map(|m| m.1).fold(f64::MIN, f64::max);
    let lo = iters.iter().map(|m| m.1).fold(f64::MAX, f64::min);
    let decreasing = steps.windows(2).all(|w| w[1].1 < w[0].1);
    Outcome::new(
        hi / lo <= 2.0 && decreasing,
        format!(
            "sparse Polyak median iters to plateau by d: {iters:?} (max/min {:.3}); \
             classic Polyak median pre-plateau step by d: {steps:.4?} (strictly decreasing: {decreasing})",
            hi / lo
        ),
    )
}

// ---------------------------------------------------------------- 8

fn logistic_setup(step: StepChoice) -> GridSetup {
    let (s_star, d) = (75, 1250);
    GridSetup {
        instance: InstanceSpec {
            design: DesignSpec::new(sample_size(5.0, s_star, d), d, 0.5).unwrap(),
            truth: TruthSpec::new(d, s_star).unwrap(),
            noise: NoiseSpec::logistic(),
        },
        step,
        max_iters: 500,
        operators: vec![ThresholdKind::Ht, ThresholdKind::Rt],
    }
}

fn logistic_replication(replays: &mut Replays) -> Outcome {
    let grid = [75, 100, 125, 150, 175];
    let seeds: Vec<u64> = (0..=10).collect();
    let polyak_setup = logistic_setup(StepChoice::SparsePolyak {
        ht_width: HtWidth::TwoS,
    });
    let polyak = compare_operators(&polyak_setup, &grid, &seeds).unwrap();
    let fixed = compare_operators(&logistic_setup(StepChoice::FixedLhat), &grid, &seeds).unwrap();

    let best = |r: &GridResult| r.rows.iter().map(|row| row.final_error_sq).fold(f64::INFINITY, f64::min);
    let (polyak_best, fixed_best) = (best(&polyak), best(&fixed));
    let ht = polyak.row(ThresholdKind::Ht).unwrap().clone();
    let rt = polyak.row(ThresholdKind::Rt).unwrap().clone();
    let a = polyak_best < fixed_best;
    let b = rt.best_s <= ht.best_s;
    let c = rt.final_error_sq <= ht.final_error_sq;

    let cell = polyak.cells_for(ThresholdKind::Rt, 100).next().unwrap();
    let seed = cell.seed;
    replays.push((
        format!("logistic RT s=100 seed {seed}"),
        Box::new(move || {
            let setup = logistic_setup(StepChoice::SparsePolyak {
                ht_width: HtWidth::TwoS,
            });
            let inst = Instance::generate(setup.instance, seed).unwrap();
            run_cell(&inst, ThresholdSpec::rt(100).unwrap(), setup.step, setup.max_iters).unwrap()
        }),
        csv_bytes(&cell.trace),
    ));

    let fmt = |r: &GridResult, k| {
        r.medians(k)
            .iter()
            .map(|(s, m)| format!("{s}:{m:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Outcome::new(
        a && b && c,
        format!(
            "(a) sparse Polyak best {polyak_best:.4} vs fixed best {fixed_best:.4}: {a}; \
             (b) RT best s {} vs HT best s {}: {b}; (c) RT {:.4} vs HT {:.4}: {c}. \
             Medians by s: polyak HT [{}] RT [{}]; fixed HT [{}] RT [{}]",
            rt.best_s,
            ht.best_s,
            rt.final_error_sq,
            ht.final_error_sq,
            fmt(&polyak, ThresholdKind::Ht),
            fmt(&polyak, ThresholdKind::Rt),
            fmt(&fixed, ThresholdKind::Ht),
            fmt(&fixed, ThresholdKind::Rt),
        ),
    )
}

// ---------------------------------------------------------------- 9

fn assumption_checkers() -> Outcome {
    let (d, s) = (500, 10);
    let n = (4.0 * s as f64 * (d as f64).ln()).ceil() as usize;
    let spec = InstanceSpec {
        design: DesignSpec::new(n, d, 0.5).unwrap(),
        truth: TruthSpec::new(d, s).unwrap(),
        noise: NoiseSpec::linear(0.5).unwrap(),
    };
    let inst = Instance::generate(spec, 9).unwrap();
    let exact = compute_regularity(&spec.design, s).unwrap();
    let pairs = 10_000;
    let rsc = check_rsc(&inst.model, &exact, pairs, 1).unwrap();
    let rss = check_rss(&inst.model, &exact, pairs, 1).unwrap();
    let weak = check_weak_rsc(&inst.model, &exact, pairs, 1).unwrap();
    let inflated = RegularityParams {
        mu: 10.0 * exact.mu,
        ..exact
    };
    let deflated = RegularityParams {
        l: exact.l / 10.0,
        ..exact
    };
    let rsc_power = check_rsc(&inst.model, &inflated, pairs, 1).unwrap();
    let rss_power = check_rss(&inst.model, &deflated, pairs, 1).unwrap();

    let logit = Instance::generate(
        InstanceSpec {
            noise: NoiseSpec::logistic(),
            ..spec
        },
        9,
    )
    .unwrap();
    let zero = RegularityParams::new(0.0, 0.0, 0.0, s);
    let convex = check_rsc(&logit.model, &zero, pairs, 1).unwrap();

    let sound = rsc.violations == 0 && rss.violations == 0 && weak.violations == 0 && convex.violations == 0;
    let power = rsc_power.violations > 0 && rss_power.violations > 0;
    Outcome::new(
        sound && power,
        format!(
            "n={n}; exact constants: RSC {} / RSS {} / weak RSC {} violations, logistic convexity {}; \
             mu x10: {} RSC violations; L/10: {} RSS violations",
            rsc.violations, rss.violations, weak.violations, convex.violations, rsc_power.violations, rss_power.violations
        ),
    )
}

// ---------------------------------------------------------------- 10

fn determinism(replays: &Replays) -> Outcome {
    let mut mismatched = Vec::new();
    for (name, replay, bytes) in replays {
        if csv_bytes(&replay()) != *bytes {
            mismatched.push(name.clone());
        }
    }
    Outcome::new(
        !replays.is_empty() && mismatched.is_empty(),
        format!("{} traces replayed; mismatched: {mismatched:?}", replays.len()),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let mut replays: Replays = Vec::new();
    let mut all_pass = true;
    let mut report = |k: u32, name: &str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = within_budget(elapsed, budget);
        let pass = outcome.pass && in_time;
        all_pass &= pass;
        println!(
            "[{}] {k:>2} {name} ({:.1} s, budget {budget} s{}): {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", OVER BUDGET" },
            outcome.detail
        );
    };

    if selected(1) {
        report(1, "operator unit suite", 5, &mut operator_suite);
    }
    if selected(2) {
        report(2, "concavity certification", 60, &mut concavity_certification);
    }
    if selected(3) {
        report(3, "gradient correctness", 10, &mut gradient_correctness);
    }
    if selected(4) || selected(10) {
        report(4, "noiseless exact recovery", 120, &mut || noiseless_recovery(&mut replays));
    }
    if selected(5) || selected(10) {
        report(5, "contraction and floor confinement", 300, &mut || contraction_floor(&mut replays));
    }
    if selected(6) || selected(7) || selected(10) {
        let start = Instant::now();
        let data = sweep(&mut replays);
        let shared = start.elapsed().as_secs_f64();
        println!("     (dimension sweep for 6 and 7 took {shared:.1} s)");
        report(6, "statistical precision scaling", 600, &mut || precision_scaling(&data));
        report(7, "rate invariance", 600, &mut || rate_invariance(&data));
    }
    if selected(8) || selected(10) {
        report(8, "logistic grid replication", 900, &mut || logistic_replication(&mut replays));
    }
    if selected(9) {
        report(9, "assumption checkers", 120, &mut assumption_checkers);
    }
    if selected(10) {
        report(10, "determinism", 600, &mut || determinism(&replays));
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
