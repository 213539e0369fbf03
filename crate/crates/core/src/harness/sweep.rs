//! Seeded multi-method sweeps with deterministic aggregation.
//!
//! Runs execute in a dedicated thread pool; results are collected in input
//! order and every aggregation stream is keyed by position, so the same
//! sweep produces byte-identical artifacts at any parallelism level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::GridworldSuite;
use crate::rng::{stream, Purpose};

use super::config::{Method, RunConfig};
use super::csvio::{rows_from_run, CsvRow};
use super::metrics::bootstrap_ci;
use super::train::run_training;
use super::HarnessError;

const SWEEP_BOOTSTRAP_SEED: u64 = 0x5eed_cafe;
const SUMMARY_RESAMPLES: usize = 10_000;
const CURVE_RESAMPLES: usize = 300;
const CURVE_POINTS: usize = 120;

/// A method-by-seed matrix over one base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Template run; its `method` and `seed` fields are overridden per run.
    pub base: RunConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Mean-success level defining "steps to threshold".
    pub success_threshold: f64,
}

impl SweepConfig {
    pub fn new(base: RunConfig, methods: Vec<Method>, seeds: Vec<u64>) -> Self {
        Self {
            base,
            methods,
            seeds,
            success_threshold: 0.95,
        }
    }

    fn runs(&self) -> Vec<RunConfig> {
        let mut out = Vec::with_capacity(self.methods.len() * self.seeds.len());
        for &method in &self.methods {
            for &seed in &self.seeds {
                let mut cfg = self.base.clone();
                cfg.method = method;
                cfg.seed = seed;
                out.push(cfg);
            }
        }
        out
    }
}

/// Steps-to-threshold and final success for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetric {
    pub seed: u64,
    /// First cumulative step count with mean success at the threshold;
    /// censored runs carry their final step count.
    pub steps_to_threshold: u64,
    pub censored: bool,
    pub final_mean_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_steps_to_threshold: f64,
    pub steps_ci: (f64, f64),
    pub mean_final_success: f64,
    pub final_success_ci: (f64, f64),
    pub n_censored: usize,
    pub per_seed: Vec<SeedMetric>,
}

/// Mean-success-vs-steps curve with a bootstrap confidence band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: String,
    pub grid: Vec<u64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<CsvRow>,
    pub summaries: Vec<MethodSummary>,
    pub curves: Vec<MethodCurve>,
    /// Human-readable notes for runs that aborted on a numeric fault.
    pub failures: Vec<String>,
}

/// Executes the sweep on `parallelism` worker threads.
pub fn run_sweep(
    config: &SweepConfig,
    suite: &GridworldSuite,
    parallelism: usize,
) -> Result<SweepOutput, HarnessError> {
    if config.methods.is_empty() || config.seeds.is_empty() {
        return Err(HarnessError::BadConfig(
            "sweep needs at least one method and one seed".into(),
        ));
    }
    let runs = config.runs();
    for cfg in &runs {
        cfg.validate(suite.len())?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Io(format!("thread pool: {e}")))?;
    let results: Vec<Result<_, HarnessError>> = pool.install(|| {
        runs.par_iter()
            .map(|cfg| run_training(cfg, suite).map(|out| (cfg.clone(), out)))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        let (cfg, out) = result?;
        let run_id = format!("{}-s{}", cfg.method.name(), cfg.seed);
        if let Some(fault) = &out.fault {
            failures.push(format!("{run_id}: {fault}"));
        }
        rows.extend(rows_from_run(&run_id, cfg.seed, cfg.method.name(), &out.records));
    }
    let (summaries, curves) = aggregate_rows(&rows, config.success_threshold);
    Ok(SweepOutput {
        rows,
        summaries,
        curves,
    failures,
    })
}

struct RunView {
    method: String,
    seed: u64,
    /// (env_steps, mean success) per iteration.
    points: Vec<(u64, f64)>,
}

fn group_runs(rows: &[CsvRow]) -> Vec<RunView> {
    let mut runs: Vec<RunView> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut current: Option<(usize, usize, u64, f64, usize)> = None; // run idx, iteration, steps, success sum, tasks
    for row in rows {
        let run_idx = match index.get(row.run_id.as_str()) {
            Some(&i) => i,
            None => {
                let i = runs.len();
                index.insert(row.run_id.clone(), i);
                runs.push(RunView {
                    method: row.method.clone(),
                    seed: row.seed,
                    points: Vec::new(),
                });
                i
            }
        };
        match current {
            Some((idx, iter, steps, sum, count)) if idx == run_idx && iter == row.iteration => {
                current = Some((idx, iter, steps, sum + row.success_rate, count + 1));
            }
            Some((idx, _, steps, sum, count)) => {
                runs[idx].points.push((steps, sum / count as f64));
                current = Some((run_idx, row.iteration, row.env_steps, row.success_rate, 1));
            }
            None => {
                current = Some((run_idx, row.iteration, row.env_steps, row.success_rate, 1));
            }
        }
    }
    if let Some((idx, _, steps, sum, count)) = current {
        runs[idx].points.push((steps, sum / count as f64));
    }
    runs
}

/// Builds per-method summaries and mean curves from long-format rows.
///
/// This is a pure function of the rows and threshold, so re-rendering from
/// a CSV file reproduces a sweep's aggregates exactly.
pub fn aggregate_rows(rows: &[CsvRow], threshold: f64) -> (Vec<MethodSummary>, Vec<MethodCurve>) {
    let runs = group_runs(rows);
    let mut method_order: Vec<String> = Vec::new();
    for run in &runs {
        if !method_order.contains(&run.method) {
            method_order.push(run.method.clone());
        }
    }
    let max_steps = runs
        .iter()
        .flat_map(|r| r.points.last().map(|&(s, _)| s))
        .max()
        .unwrap_or(0);

    let mut summaries = Vec::new();
    let mut curves = Vec::new();
    for (m_idx, method) in method_order.iter().enumerate() {
        let members: Vec<&RunView> = runs.iter().filter(|r| &r.method == method).collect();
        let mut per_seed = Vec::with_capacity(members.len());
        for run in &members {
            let crossing = run.points.iter().find(|&&(_, s)| s >= threshold);
            let last = run.points.last().copied().unwrap_or((0, 0.0));
            per_seed.push(SeedMetric {
                seed: run.seed,
                steps_to_threshold: crossing.map_or(last.0, |&(steps, _)| steps),
                censored: crossing.is_none(),
                final_mean_success: last.1,
            });
        }
        let steps: Vec<f64> = per_seed.iter().map(|m| m.steps_to_threshold as f64).collect();
        let finals: Vec<f64> = per_seed.iter().map(|m| m.final_mean_success).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let ci = |v: &[f64], tag: u64| {
            if v.len() < 2 {
                let value = v.first().copied().unwrap_or(0.0);
                (value, value)
            } else {
                let mut rng = stream(SWEEP_BOOTSTRAP_SEED, Purpose::Bootstrap, m_idx as u64, tag);
                bootstrap_ci(v, 0.95, SUMMARY_RESAMPLES, &mut rng).expect("validated inputs")
            }
        };
        summaries.push(MethodSummary {
            method: method.clone(),
            mean_steps_to_threshold: mean(&steps),
            steps_ci: ci(&steps, 0),
            mean_final_success: mean(&finals),
            final_success_ci: ci(&finals, 1),
            n_censored: per_seed.iter().filter(|m| m.censored).count(),
            per_seed,
        });

        // Mean curve over a common step grid with a bootstrap band.
        let grid: Vec<u64> = (0..=CURVE_POINTS)
            .map(|i| (max_steps as f64 * i as f64 / CURVE_POINTS as f64) as u64)
            .collect();
        let mut mean_curve = Vec::with_capacity(grid.len());
        let mut lo = Vec::with_capacity(grid.len());
        let mut hi = Vec::with_capacity(grid.len());
        for (g_idx, &at) in grid.iter().enumerate() {
            let values: Vec<f64> = members
                .iter()
                .map(|run| {
                    // Success of the latest iteration at or before `at`.
                    match run.points.partition_point(|&(s, _)| s <= at) {
                        0 => 0.0,
                        idx => run.points[idx - 1].1,
                    }
                })
                .collect();
            mean_curve.push(mean(&values));
            if values.len() < 2 {
                lo.push(mean_curve[g_idx]);
                hi.push(mean_curve[g_idx]);
            } else {
                let mut rng = stream(
                    SWEEP_BOOTSTRAP_SEED,
                    Purpose::Bootstrap,
                    (m_idx + 1000) as u64,
                    g_idx as u64,
                );
                let (l, h) =
                    bootstrap_ci(&values, 0.95, CURVE_RESAMPLES, &mut rng).expect("valid");
                lo.push(l);
                hi.push(h);
            }
        }
        curves.push(MethodCurve {
            method: method.clone(),
            grid,
            mean: mean_curve,
            lo,
            hi,
        });
    }
    (summaries, curves)
}

/// Percentile bootstrap CI for the mean paired difference
/// `steps(a) - steps(b)`, pairing runs by seed.
pub fn paired_steps_difference_ci(
    a: &MethodSummary,
    b: &MethodSummary,
    level: f64,
    n_resamples: usize,
) -> Result<(f64, f64), HarnessError> {
    let mut diffs = Vec::new();
    for ma in &a.per_seed {
        if let Some(mb) = b.per_seed.iter().find(|m| m.seed == ma.seed) {
            diffs.push(ma.steps_to_threshold as f64 - mb.steps_to_threshold as f64);
        }
    }
    if diffs.len() < 2 {
        return Err(HarnessError::BadConfig(
            "paired difference needs at least two shared seeds".into(),
        ));
    }
    let mut rng = stream(SWEEP_BOOTSTRAP_SEED, Purpose::Bootstrap, 0xd1ff, 0);
    bootstrap_ci(&diffs, level, n_resamples, &mut rng)
}

/// Summary CSV: one row per method.
pub fn write_summary_csv(summaries: &[MethodSummary]) -> String {
    let mut out = String::from(
        "method,n_seeds,mean_steps_to_threshold,steps_ci_lo,steps_ci_hi,mean_final_success,final_ci_lo,final_ci_hi,n_censored\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.method,
            s.per_seed.len(),
            s.mean_steps_to_threshold,
            s.steps_ci.0,
            s.steps_ci.1,
            s.mean_final_success,
            s.final_success_ci.0,
            s.final_success_ci.1,
            s.n_censored
        ));
    }
    out
}
