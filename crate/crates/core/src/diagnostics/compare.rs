//! Operator grids and dimension sweeps over seeded synthetic instances.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{iters_to_floor, median, plateau};
use crate::error::{Error, Result};
use crate::objectives::Family;
use crate::optimizer::trace::format_sig12;
use crate::optimizer::{fixed_step_lhat, run, HtWidth, RunConfig, RunTrace, StepRule};
use crate::synthdata::{sample_size, DesignSpec, Instance, InstanceSpec, NoiseSpec, TruthSpec};
use crate::thresholding::{ThresholdKind, ThresholdSpec};

/// Step rule for grid cells. Polyak targets are `f(theta_star)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepChoice {
    SparsePolyak { ht_width: HtWidth },
    ClassicPolyak,
    Fixed { gamma: f64 },
    /// `1 / L_hat` from the exact design covariance.
    FixedLhat,
}

impl StepChoice {
    /// Sparse Polyak with the width suited to the family: `s` for linear,
    /// `2s` otherwise.
    pub fn sparse_polyak_for(family: Family) -> Self {
        let ht_width = match family {
            Family::Linear => HtWidth::S,
            Family::Logistic => HtWidth::TwoS,
        };
        StepChoice::SparsePolyak { ht_width }
    }

    pub fn rule(&self, inst: &Instance, s: usize) -> Result<StepRule> {
        Ok(match *self {
            StepChoice::SparsePolyak { ht_width } => StepRule::SparsePolyak {
                f_hat: inst.f_star()?,
                ht_width,
            },
            StepChoice::ClassicPolyak => StepRule::ClassicPolyak { f_hat: inst.f_star()? },
            StepChoice::Fixed { gamma } => StepRule::Fixed { gamma },
            StepChoice::FixedLhat => {
                let lambda_max = inst.spec.design.spectrum().lambda_max;
                StepRule::Fixed {
                    gamma: fixed_step_lhat(lambda_max, s, inst.spec.truth.s_star)?,
                }
            }
        })
    }
}

/// Runs one cell: start at zero, measure distance to the truth.
pub fn run_cell(inst: &Instance, operator: ThresholdSpec, step: StepChoice, max_iters: usize) -> Result<RunTrace> {
    let rule = step.rule(inst, operator.s)?;
    let config = RunConfig::new(&inst.model, operator, rule)
        .with_truth(&inst.truth)
        .with_max_iters(max_iters)
        .with_seed(inst.seed);
    run(&config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSetup {
    pub instance: InstanceSpec,
    pub step: StepChoice,
    pub max_iters: usize,
    pub operators: Vec<ThresholdKind>,
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub operator: ThresholdKind,
    pub s: usize,
    pub seed: u64,
    pub final_error_sq: f64,
    pub plateau_error_sq: f64,
    pub iters_to_floor: usize,
    pub trace: RunTrace,
}

/// Table row: the grid value with the lowest median final error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub operator: ThresholdSpec,
    pub best_s: usize,
    /// Median over seeds at `best_s`.
    pub final_error_sq: f64,
    /// Median over seeds at `best_s`.
    pub iters_to_floor: usize,
    /// Median over seeds at `best_s`.
    pub plateau_error_sq: f64,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Sorted by operator, then `s`, then seed.
    pub cells: Vec<GridCell>,
    pub rows: Vec<ComparisonRow>,
}

impl GridResult {
    pub fn row(&self, kind: ThresholdKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.operator.kind == kind)
    }

    pub fn cells_for(&self, kind: ThresholdKind, s: usize) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(move |c| c.operator == kind && c.s == s)
    }

    /// Median final error per `s` for one operator, in grid order.
    pub fn medians(&self, kind: ThresholdKind) -> Vec<(usize, f64)> {
        let mut grid: Vec<usize> = self.cells.iter().filter(|c| c.operator == kind).map(|c| c.s).collect();
        grid.dedup();
        grid.into_iter()
            .map(|s| {
                let errs: Vec<f64> = self.cells_for(kind, s).map(|c| c.final_error_sq).collect();
                (s, median(&errs).unwrap_or(f64::NAN))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "operator,s,seed,final_error_sq,iters_to_floor")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                c.operator,
                c.s,
                c.seed,
                format_sig12(c.final_error_sq),
                c.iters_to_floor
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Middle element after sorting; the upper middle for even lengths.
fn median_usize(mut v: Vec<usize>) -> usize {
    v.sort_unstable();
    v[v.len() / 2]
}

fn summarize(trace: RunTrace, operator: ThresholdKind, s: usize, seed: u64) -> Result<GridCell> {
    let errors = trace
        .error_series()
        .ok_or_else(|| Error::invalid("grid runs need a reference point"))?;
    let level = plateau(&errors).expect("trace holds theta_0");
    Ok(GridCell {
        operator,
        s,
        seed,
        final_error_sq: *errors.last().expect("nonempty"),
        plateau_error_sq: level,
        iters_to_floor: iters_to_floor(&errors, level).unwrap_or(errors.len() - 1),
        trace,
    })
}

/// Runs every (operator, s, seed) cell.
pub fn run_grid(setup: &GridSetup, s_grid: &[usize], seeds: &[u64]) -> Result<GridResult> {
    if s_grid.is_empty() || seeds.is_empty() || setup.operators.is_empty() {
        return Err(Error::invalid("grid, seed list and operator list must be nonempty"));
    }
    setup.instance.validate()?;
    let mut s_grid = s_grid.to_vec();
    s_grid.sort_unstable();
    s_grid.dedup();
    let instances: Vec<Instance> = seeds
        .par_iter()
        .map(|&seed| Instance::generate(setup.instance, seed))
        .collect::<Result<_>>()?;

    let jobs: Vec<(ThresholdKind, usize, usize)> = setup
        .operators
        .iter()
        .flat_map(|&k| s_grid.iter().flat_map(move |&s| (0..seeds.len()).map(move |i| (k, s, i))))
        .collect();
    let mut cells: Vec<GridCell> = jobs
        .par_iter()
        .map(|&(kind, s, i)| {
            let inst = &instances[i];
            let trace = run_cell(inst, ThresholdSpec::new(kind, s)?, setup.step, setup.max_iters)?;
            summarize(trace, kind, s, inst.seed)
        })
        .collect::<Result<_>>()?;
    cells.sort_by_key(|c| (c.operator.label(), c.s, c.seed));

    let mut rows = Vec::new();
    for &kind in &setup.operators {
        let mut best: Option<(usize, f64)> = None;
        for &s in &s_grid {
            let errs: Vec<f64> = cells
                .iter()
                .filter(|c| c.operator == kind && c.s == s)
                .map(|c| c.final_error_sq)
                .collect();
            let m = median(&errs).expect("seeds nonempty");
            // strict comparison keeps the smaller s on ties
            let better = match best {
                None => true,
                Some((bs, bm)) => m < bm || (m == bm && s < bs),
            };
            if better {
                best = Some((s, m));
            }
        }
        let (best_s, final_error_sq) = best.expect("grid nonempty");
        let at_best: Vec<&GridCell> = cells.iter().filter(|c| c.operator == kind && c.s == best_s).collect();
        rows.push(ComparisonRow {
            operator: ThresholdSpec::new(kind, best_s)?,
            best_s,
            final_error_sq,
            iters_to_floor: median_usize(at_best.iter().map(|c| c.iters_to_floor).collect()),
            plateau_error_sq: median(&at_best.iter().map(|c| c.plateau_error_sq).collect::<Vec<_>>())
                .expect("seeds nonempty"),
        });
    }
    Ok(GridResult { cells, rows })
}

/// Runs the grid for both operators and reports one row per operator.
pub fn compare_operators(setup: &GridSetup, s_grid: &[usize], seeds: &[u64]) -> Result<GridResult> {
    let setup = GridSetup {
        operators: vec![ThresholdKind::Ht, ThresholdKind::Rt],
        ..setup.clone()
    };
    run_grid(&setup, s_grid, seeds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSetup {
    pub dims: Vec<usize>,
    pub s_star: usize,
    pub noise: NoiseSpec,
    pub omega: f64,
    /// `n = ceil(n_factor * s_star * log d)`.
    pub n_factor: f64,
    pub column_normalize: bool,
    pub operator: ThresholdSpec,
    pub seeds: Vec<u64>,
    pub max_iters: usize,
}

impl SweepSetup {
    pub fn instance_spec(&self, d: usize) -> Result<InstanceSpec> {
        let mut design = DesignSpec::new(sample_size(self.n_factor, self.s_star, d), d, self.omega)?;
        design.column_normalize = self.column_normalize;
        Ok(InstanceSpec {
            design,
            truth: TruthSpec::new(d, self.s_star)?,
            noise: self.noise,
        })
    }
}

/// Per-dimension medians over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    pub sparse_plateau_error_sq: f64,
    pub sparse_iters_to_floor: usize,
    pub sparse_median_step: f64,
    pub classic_plateau_error_sq: f64,
    pub classic_iters_to_floor: usize,
    pub classic_median_step: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "d,n,sparse_plateau_error_sq,sparse_iters_to_floor,sparse_median_step,\
classic_plateau_error_sq,classic_iters_to_floor,classic_median_step";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d,
            self.n,
            format_sig12(self.sparse_plateau_error_sq),
            self.sparse_iters_to_floor,
            format_sig12(self.sparse_median_step),
            format_sig12(self.classic_plateau_error_sq),
            self.classic_iters_to_floor,
            format_sig12(self.classic_median_step)
        )
    }
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", SweepRow::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()?;
    Ok(())
}

struct RunStats {
    plateau: f64,
    iters_to_floor: usize,
    /// Median step over the iterations before the plateau is reached. Late
    /// steps collapse toward zero as `f` approaches its target and would
    /// otherwise dominate.
    median_step: f64,
}

fn run_stats(trace: &RunTrace) -> RunStats {
    let errors = trace.error_series().expect("sweep runs carry a reference point");
    let level = plateau(&errors).expect("nonempty");
    let k = iters_to_floor(&errors, level).unwrap_or(errors.len() - 1);
    let steps = trace.step_sizes();
    RunStats {
        plateau: level,
        iters_to_floor: k,
        median_step: median(&steps[..k.max(1)]).expect("nonempty"),
    }
}

/// Sparse and classic Polyak at every dimension, same operator and seeds.
pub fn dimension_sweep(setup: &SweepSetup) -> Result<Vec<SweepRow>> {
    if setup.dims.is_empty() || setup.seeds.is_empty() {
        return Err(Error::invalid("sweep needs at least one dimension and one seed"));
    }
    let sparse = StepChoice::sparse_polyak_for(setup.noise.family);
    let jobs: Vec<(usize, u64)> = setup
        .dims
        .iter()
        .flat_map(|&d| setup.seeds.iter().map(move |&seed| (d, seed)))
        .collect();
    let stats: Vec<(RunStats, RunStats)> = jobs
        .par_iter()
        .map(|&(d, seed)| {
            let inst = Instance::generate(setup.instance_spec(d)?, seed)?;
            let a = run_cell(&inst, setup.operator, sparse, setup.max_iters)?;
            let b = run_cell(&inst, setup.operator, StepChoice::ClassicPolyak, setup.max_iters)?;
            Ok((run_stats(&a), run_stats(&b)))
        })
        .collect::<Result<_>>()?;

    let k = setup.seeds.len();
    setup
        .dims
        .iter()
        .zip(stats.chunks(k))
        .map(|(&d, chunk)| {
            let med = |f: &dyn Fn(&(RunStats, RunStats)) -> f64| {
                median(&chunk.iter().map(f).collect::<Vec<_>>()).expect("seeds nonempty")
            };
            Ok(SweepRow {
                d,
                n: setup.instance_spec(d)?.design.n,
                sparse_plateau_error_sq: med(&|c| c.0.plateau),
                sparse_iters_to_floor: median_usize(chunk.iter().map(|c| c.0.iters_to_floor).collect()),
                sparse_median_step: med(&|c| c.0.median_step),
                classic_plateau_error_sq: med(&|c| c.1.plateau),
                classic_iters_to_floor: median_usize(chunk.iter().map(|c| c.1.iters_to_floor).collect()),
                classic_median_step: med(&|c| c.1.median_step),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless_setup() -> GridSetup {
        GridSetup {
            instance: InstanceSpec {
                design: DesignSpec::new(200, 60, 0.0).unwrap(),
                truth: TruthSpec::new(60, 4).unwrap(),
                noise: NoiseSpec::linear(1e-12).unwrap(),
            },
            step: StepChoice::SparsePolyak { ht_width: HtWidth::S },
            max_iters: 300,
            operators: vec![ThresholdKind::Ht],
        }
    }

    #[test]
    fn forced_grid_gives_matching_rows() {
        let result = compare_operators(&noiseless_setup(), &[4], &[7]).unwrap();
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            assert_eq!(row.best_s, 4);
            assert!(row.final_error_sq >= 0.0);
        }
        for cell in &result.cells {
            assert_eq!(cell.trace.final_theta.nnz(), 4);
        }
    }

    #[test]
    fn grid_is_sorted_and_deterministic() {
        let a = run_grid(&noiseless_setup(), &[6, 4], &[2, 1]).unwrap();
        let b = run_grid(&noiseless_setup(), &[6, 4], &[2, 1]).unwrap();
        let keys: Vec<(usize, u64)> = a.cells.iter().map(|c| (c.s, c.seed)).collect();
        assert_eq!(keys, vec![(4, 1), (4, 2), (6, 1), (6, 2)]);
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(String::from_utf8(ca).unwrap().starts_with("operator,s,seed,final_error_sq,iters_to_floor\n"));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(run_grid(&noiseless_setup(), &[], &[1]).is_err());
        assert!(run_grid(&noiseless_setup(), &[4], &[]).is_err());
    }

    #[test]
    fn single_dimension_sweep() {
        let setup = SweepSetup {
            dims: vec![80],
            s_star: 3,
            noise: NoiseSpec::linear(0.5).unwrap(),
            omega: 0.5,
            n_factor: 5.0,
            column_normalize: false,
            operator: ThresholdSpec::rt(6).unwrap(),
            seeds: vec![1, 2, 3],
            max_iters: 100,
        };
        let rows = dimension_sweep(&setup).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, sample_size(5.0, 3, 80));
        assert!(rows[0].sparse_median_step > 0.0);
    }
}
