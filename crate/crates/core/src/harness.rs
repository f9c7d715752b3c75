//! Minimum-population search by bisection, scalability sweeps, and
//! machine-readable output.
//!
//! The success criterion for a population size is strict: every one of the
//! probe's runs must cover the full reference front within its generation
//! cap. Bisection doubles the population until the criterion passes, then
//! binary-searches the bracket down to 10% relative width; the whole
//! procedure repeats with fresh seeds and the evaluation counts of the
//! successful runs at each repetition's final size make up the reported
//! statistics.
//!
//! Seeds derive from the experiment coordinates (problem, size, variant,
//! repetition, run index), so results are independent of execution order
//! and sweeps can run their grid points concurrently. Exhausting the
//! evaluation budget is a first-class outcome recorded in the result row,
//! not an error.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::engine::{run, AlgorithmConfig, RunResult};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, hash_str};

/// Knobs of the bisection procedure.
#[derive(Clone, Copy, Debug)]
pub struct BisectionSettings {
    /// Population size the doubling phase starts from.
    pub initial_pop: usize,
    /// Doubling stops (as a failure) past this size.
    pub doubling_cap: usize,
    /// Binary search stops when `high <= stop_ratio * low`.
    pub stop_ratio: f64,
    /// Independent repetitions of the whole procedure.
    pub repetitions: usize,
    /// Runs per probe; all must succeed for the probe to pass.
    pub runs_per_probe: usize,
    /// Evaluation budget for the whole call, across repetitions.
    pub budget: u64,
}

impl Default for BisectionSettings {
    fn default() -> Self {
        Self {
            initial_pop: 16,
            doubling_cap: 1 << 20,
            stop_ratio: 1.1,
            repetitions: 10,
            runs_per_probe: 10,
            budget: 100_000_000,
        }
    }
}

/// The ten (by default) run seeds for one repetition of an experiment.
pub fn seeds_for(cfg: &AlgorithmConfig, rep: usize, count: usize) -> Vec<u64> {
    let rep_seed = derive_seed(&[
        hash_str(cfg.problem.name()),
        cfg.problem.size() as u64,
        hash_str(&cfg.variant_id()),
        rep as u64,
    ]);
    (0..count)
        .map(|j| derive_seed(&[rep_seed, j as u64]))
        .collect()
}

/// Execute one run per seed at population size `pop`. Runs are
/// independent; they may execute concurrently and results keep seed order.
pub fn run_seeds(cfg: &AlgorithmConfig, pop: usize, seeds: &[u64]) -> Result<Vec<RunResult>> {
    let probe_cfg = cfg.clone().with_population(pop);
    seeds
        .par_iter()
        .map(|&seed| run(&probe_cfg, seed))
        .collect()
}

/// True iff every seeded run at population `pop` fully covers the
/// reference front within the generation cap.
pub fn success_criterion(cfg: &AlgorithmConfig, pop: usize, seeds: &[u64]) -> Result<bool> {
    Ok(run_seeds(cfg, pop, seeds)?.iter().all(|r| r.success))
}

/// What one probe of the success criterion observed.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub all_succeeded: bool,
    /// Evaluation counts of the successful runs.
    pub evaluations: Vec<u64>,
    /// Total evaluations the probe consumed (successes and failures).
    pub cost: u64,
}

/// How a bisection ended.
#[derive(Clone, Debug)]
pub enum BisectionOutcome {
    Found {
        /// Aggregate minimum population: mean of the per-repetition
        /// minima, rounded up.
        min_pop: usize,
        /// Final population size of each repetition.
        rep_minima: Vec<usize>,
        /// Evaluation counts of all successful runs at the final sizes.
        evaluations: Vec<u64>,
        mean_evals: f64,
        std_evals: f64,
    },
    Failed {
        /// Largest population size that failed a probe, if any probe ran.
        last_failing_pop: Option<usize>,
        /// Evaluations consumed before giving up.
        evaluations_spent: u64,
    },
}

impl BisectionOutcome {
    pub fn is_found(&self) -> bool {
        matches!(self, BisectionOutcome::Found { .. })
    }

    pub fn min_pop(&self) -> Option<usize> {
        match self {
            BisectionOutcome::Found { min_pop, .. } => Some(*min_pop),
            BisectionOutcome::Failed { .. } => None,
        }
    }
}

/// One experiment row: problem, size, variant, and the bisection outcome.
#[derive(Clone, Debug)]
pub struct BisectionResult {
    pub problem: String,
    pub n: usize,
    pub algorithm: String,
    pub clustering: String,
    pub replacement: String,
    pub outcome: BisectionOutcome,
}

/// Bisection core over an abstract probe, injectable for testing against
/// synthetic predicates.
///
/// `probe(rep, pop)` evaluates the success criterion; `cost_bound(pop)`
/// bounds the evaluations one probe at `pop` may consume. A probe only
/// starts if the bound still fits the remaining budget, which keeps the
/// procedure deterministic under concurrent probe internals.
pub fn bisect_with_probe<P, C>(
    mut probe: P,
    cost_bound: C,
    settings: &BisectionSettings,
) -> Result<BisectionOutcome>
where
    P: FnMut(usize, usize) -> Result<ProbeReport>,
    C: Fn(usize) -> u64,
{
    let mut spent = 0u64;
    let mut last_failing: Option<usize> = None;
    let mut rep_minima = Vec::with_capacity(settings.repetitions);
    let mut evaluations = Vec::new();

    for rep in 0..settings.repetitions {
        // Doubling phase.
        let mut pop = settings.initial_pop;
        let mut rep_fail: Option<usize> = None;
        let (mut high, mut high_evals) = loop {
            if spent.saturating_add(cost_bound(pop)) > settings.budget {
                return Ok(BisectionOutcome::Failed {
                    last_failing_pop: last_failing,
                    evaluations_spent: spent,
                });
            }
            let report = probe(rep, pop)?;
            spent += report.cost;
            if report.all_succeeded {
                break (pop, report.evaluations);
            }
            rep_fail = Some(pop);
            last_failing = Some(last_failing.unwrap_or(0).max(pop));
            if pop >= settings.doubling_cap {
                return Ok(BisectionOutcome::Failed {
                    last_failing_pop: last_failing,
                    evaluations_spent: spent,
                });
            }
            pop *= 2;
        };

        // Binary search on [last failing, first passing].
        if let Some(mut low) = rep_fail {
            while (high as f64) > settings.stop_ratio * (low as f64) {
                let mid = (low + high) / 2;
                if mid <= low || mid >= high {
                    break;
                }
                if spent.saturating_add(cost_bound(mid)) > settings.budget {
                    return Ok(BisectionOutcome::Failed {
                        last_failing_pop: last_failing,
                        evaluations_spent: spent,
                    });
                }
                let report = probe(rep, mid)?;
                spent += report.cost;
                if report.all_succeeded {
                    high = mid;
                    high_evals = report.evaluations;
                } else {
                    low = mid;
                    last_failing = Some(last_failing.unwrap_or(0).max(mid));
                }
            }
        }

        rep_minima.push(high);
        evaluations.extend(high_evals);
    }

    let mean_minimum =
        rep_minima.iter().sum::<usize>() as f64 / rep_minima.len().max(1) as f64;
    let (mean_evals, std_evals) = mean_std(&evaluations);
    Ok(BisectionOutcome::Found {
        min_pop: mean_minimum.ceil() as usize,
        rep_minima,
        evaluations,
        mean_evals,
        std_evals,
    })
}

fn mean_std(values: &[u64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Find the minimum population size at which `cfg` meets the all-runs
/// success criterion, repeating the search with fresh seeds.
pub fn bisect_population(
    cfg: &AlgorithmConfig,
    settings: &BisectionSettings,
) -> Result<BisectionResult> {
    let gens = cfg.effective_max_generations() as u64;
    let runs = settings.runs_per_probe;
    let outcome = bisect_with_probe(
        |rep, pop| {
            let seeds = seeds_for(cfg, rep, runs);
            let results = run_seeds(cfg, pop, &seeds)?;
            Ok(ProbeReport {
                all_succeeded: results.iter().all(|r| r.success),
                evaluations: results
                    .iter()
                    .filter(|r| r.success)
                    .map(|r| r.evaluations_used)
                    .collect(),
                cost: results.iter().map(|r| r.evaluations_used).sum(),
            })
        },
        |pop| (runs as u64) * (pop as u64) * (gens + 1),
        settings,
    )?;
    Ok(BisectionResult {
        problem: cfg.problem.name().to_string(),
        n: cfg.problem.size(),
        algorithm: cfg.operator.id().to_string(),
        clustering: cfg.clustering.id(),
        replacement: cfg.replacement.id().to_string(),
        outcome,
    })
}

/// One bisection row per grid point.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<BisectionResult>,
}

/// Bisect every configuration in the grid. Points are independent (their
/// seeds come from their own coordinates), so they may run concurrently;
/// the budget applies per point.
pub fn sweep(grid: &[AlgorithmConfig], settings: &BisectionSettings) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep needs a nonempty grid".into()));
    }
    let rows = grid
        .par_iter()
        .map(|cfg| bisect_population(cfg, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

/// Format with 6 significant digits, plain decimal notation.
pub fn fmt_sig6(x: f64) -> String {
    const SIG: i32 = 6;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (SIG - 1 - exp).max(0) as usize;
    let scale = 10f64.powi(SIG - 1 - exp);
    let rounded = (x * scale).round() / scale;
    format!("{rounded:.decimals$}")
}

/// Write the sweep as CSV: fixed header, one row per grid point in
/// (problem, n, algorithm) order, reals at 6 significant digits. Failure
/// rows carry empty numeric fields and `runs = 0`.
pub fn emit_csv<W: Write>(table: &SweepTable, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "problem,n,algorithm,clustering,replacement,min_pop,mean_evals,std_evals,runs"
    )?;
    let mut rows: Vec<&BisectionResult> = table.rows.iter().collect();
    rows.sort_by(|a, b| {
        (&a.problem, a.n, &a.algorithm, &a.clustering, &a.replacement).cmp(&(
            &b.problem,
            b.n,
            &b.algorithm,
            &b.clustering,
            &b.replacement,
        ))
    });
    for row in rows {
        let (min_pop, mean, std, runs) = match &row.outcome {
            BisectionOutcome::Found {
                min_pop,
                evaluations,
                mean_evals,
                std_evals,
                ..
            } => (
                min_pop.to_string(),
                fmt_sig6(*mean_evals),
                fmt_sig6(*std_evals),
                evaluations.len(),
            ),
            BisectionOutcome::Failed { .. } => (String::new(), String::new(), String::new(), 0),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.problem,
            row.n,
            row.algorithm,
            row.clustering,
            row.replacement,
            min_pop,
            mean,
            std,
            runs
        )?;
    }
    Ok(())
}

/// [`emit_csv`] into a file, reporting the path on failure.
pub fn write_csv_file(table: &SweepTable, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    emit_csv(table, &mut file).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
