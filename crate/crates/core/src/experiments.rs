//! Monte Carlo harness, grid-search tuning, and the derived tables.
//!
//! Run `i` draws its initial state from the box with a generator seeded by
//! [`split_seed`]`(master_seed, i)`, so every parameter value of a sweep sees
//! the same initial states (common random numbers) and results do not depend
//! on the worker count. Aggregates are reduced in run-index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vector;
use crate::plant::PlantDesign;
use crate::rng::{split_seed, SeededRng};
use crate::sim::{simulate_summary, total_cost, RunSummary, SimConfig, SimError};
use crate::trigger::{TriggerError, TriggerFamily, TriggerPolicy};

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid Monte Carlo config: {0}")]
    InvalidConfig(String),
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("every grid point produced only failed runs")]
    AllUnstable,
    #[error("event count must be a non-negative finite number, got {0}")]
    InvalidEvents(f64),
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_runs: usize,
    /// Per-dimension `(low, high)` bounds of the uniform initial-state box.
    pub x0_box: Vec<(f64, f64)>,
    pub master_seed: u64,
    pub sim: SimConfig,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_runs: 100,
            x0_box: vec![(-5.0, 5.0), (-5.0, 5.0)],
            master_seed: DEFAULT_MASTER_SEED,
            sim: SimConfig::default(),
        }
    }
}

impl McConfig {
    pub fn validate(&self, n: usize) -> Result<(), ExperimentError> {
        if self.n_runs == 0 {
            return Err(ExperimentError::InvalidConfig(
                "n_runs must be at least 1".into(),
            ));
        }
        if self.x0_box.len() != n {
            return Err(ExperimentError::InvalidConfig(format!(
                "x0_box has {} dimensions, plant has {n}",
                self.x0_box.len()
            )));
        }
        for (i, &(lo, hi)) in self.x0_box.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(ExperimentError::InvalidConfig(format!(
                    "x0_box[{i}] = ({lo}, {hi}) needs finite low < high"
                )));
            }
        }
        self.sim.steps()?;
        Ok(())
    }

    /// Seed of run `run_id`.
    pub fn run_seed(&self, run_id: usize) -> u64 {
        split_seed(self.master_seed, run_id as u64)
    }

    /// Initial state of run `run_id`.
    pub fn draw_x0(&self, run_id: usize) -> Vector {
        let mut rng = SeededRng::new(self.run_seed(run_id));
        self.x0_box
            .iter()
            .map(|&(lo, hi)| rng.uniform(lo, hi))
            .collect::<Vec<_>>()
            .into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed(RunSummary),
    Failed(SimError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub x0: Vector,
    pub outcome: RunOutcome,
}

impl RunRecord {
    pub fn summary(&self) -> Option<&RunSummary> {
        match &self.outcome {
            RunOutcome::Completed(s) => Some(s),
            RunOutcome::Failed(_) => None,
        }
    }
}

/// Mean and sample standard deviation over completed runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub events_mean: f64,
    pub events_std: f64,
    pub j_mean: f64,
    pub j_std: f64,
    pub total_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McAggregate {
    pub policy: TriggerPolicy,
    pub lambda_cost: f64,
    pub n_completed: usize,
    pub n_failed: usize,
    /// `None` when every run failed.
    pub stats: Option<McStats>,
    pub records: Vec<RunRecord>,
}

impl McAggregate {
    pub fn is_complete(&self) -> bool {
        self.stats.is_some()
    }
}

/// Mean and sample standard deviation (divisor `n − 1`; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn run_one(
    design: &PlantDesign,
    policy: &TriggerPolicy,
    mc: &McConfig,
    run_id: usize,
) -> RunRecord {
    let x0 = mc.draw_x0(run_id);
    let outcome = match simulate_summary(design, policy, &x0, &mc.sim) {
        Ok(s) => RunOutcome::Completed(s),
        Err(e) => RunOutcome::Failed(e),
    };
    RunRecord {
        run_id,
        seed: mc.run_seed(run_id),
        x0,
        outcome,
    }
}

/// Runs `mc.n_runs` seeded simulations of `policy` and aggregates them.
///
/// `workers <= 1` runs serially; otherwise a dedicated pool of that size is
/// used. Output is identical either way.
pub fn monte_carlo(
    design: &PlantDesign,
    policy: &TriggerPolicy,
    mc: &McConfig,
    workers: usize,
) -> Result<McAggregate, ExperimentError> {
    mc.validate(design.n())?;
    policy.validate()?;

    let records: Vec<RunRecord> = if workers <= 1 {
        (0..mc.n_runs)
            .map(|i| run_one(design, policy, mc, i))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ExperimentError::WorkerPool(e.to_string()))?;
        pool.install(|| {
            (0..mc.n_runs)
                .into_par_iter()
                .map(|i| run_one(design, policy, mc, i))
                .collect()
        })
    };

    Ok(aggregate(*policy, mc.sim.lambda_cost, records))
}

fn aggregate(policy: TriggerPolicy, lambda_cost: f64, records: Vec<RunRecord>) -> McAggregate {
    let done: Vec<&RunSummary> = records.iter().filter_map(RunRecord::summary).collect();
    let n_completed = done.len();
    let n_failed = records.len() - n_completed;
    let stats = (n_completed > 0).then(|| {
        let events: Vec<f64> = done.iter().map(|s| s.event_count as f64).collect();
        let j: Vec<f64> = done.iter().map(|s| s.j_state).collect();
        let totals: Vec<f64> = done.iter().map(|s| s.j_total).collect();
        let (events_mean, events_std) = mean_std(&events);
        let (j_mean, j_std) = mean_std(&j);
        McStats {
            events_mean,
            events_std,
            j_mean,
            j_std,
            total_mean: mean_std(&totals).0,
        }
    });
    McAggregate {
        policy,
        lambda_cost,
        n_completed,
        n_failed,
        stats,
        records,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub parameter: f64,
    pub n_completed: usize,
    pub n_failed: usize,
    pub stats: Option<McStats>,
    /// First (up to three) initial states drawn at this grid point.
    pub x0_head: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub family: TriggerFamily,
    pub best_parameter: f64,
    pub best_stats: McStats,
    pub table: Vec<GridRow>,
}

/// Exhaustive search for the parameter minimizing mean `J + λN`.
///
/// Every grid point reuses the same seeds. Ties go to the smaller parameter.
pub fn grid_search(
    design: &PlantDesign,
    family: TriggerFamily,
    grid: &[f64],
    mc: &McConfig,
    workers: usize,
) -> Result<GridSearchResult, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    mc.validate(design.n())?;
    for &p in grid {
        family.with_parameter(p).validate()?;
    }

    let mut table = Vec::with_capacity(grid.len());
    for &p in grid {
        let agg = monte_carlo(design, &family.with_parameter(p), mc, workers)?;
        table.push(GridRow {
            parameter: p,
            n_completed: agg.n_completed,
            n_failed: agg.n_failed,
            stats: agg.stats,
            x0_head: agg.records.iter().take(3).map(|r| r.x0.clone()).collect(),
        });
    }

    let best = table
        .iter()
        .filter_map(|row| row.stats.map(|s| (row.parameter, s)))
        .min_by(|a, b| {
            a.1.total_mean
                .total_cmp(&b.1.total_mean)
                .then(a.0.total_cmp(&b.0))
        })
        .ok_or(ExperimentError::AllUnstable)?;

    Ok(GridSearchResult {
        family,
        best_parameter: best.0,
        best_stats: best.1,
        table,
    })
}

/// Default sweep for each family; each brackets its usual optimum.
pub fn default_grid(family: TriggerFamily) -> Vec<f64> {
    match family {
        TriggerFamily::Directional => (1..=10).map(|i| i as f64 / 20.0).collect(),
        TriggerFamily::Isotropic => (1..=9).map(|i| i as f64 / 10.0).collect(),
        TriggerFamily::TimeVarying => (1..=10).map(|i| i as f64 / 10.0).collect(),
    }
}

/// The three tuned triggers compared in the benchmark study.
pub fn tuned_policies() -> [TriggerPolicy; 3] {
    [
        TriggerPolicy::Directional { sigma: 0.10 },
        TriggerPolicy::TimeVarying { alpha: 0.50 },
        TriggerPolicy::Isotropic { sigma: 0.70 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub method: String,
    pub parameter: f64,
    pub events_mean: f64,
    pub events_std: f64,
    pub j_mean: f64,
    pub j_std: f64,
    /// False when the method has no completed runs; the numbers are then NaN.
    pub complete: bool,
}

/// Plot-ready communication/performance points, one per aggregate.
pub fn pareto_table(aggregates: &[McAggregate]) -> Vec<ParetoRow> {
    aggregates
        .iter()
        .map(|agg| {
            let s = agg.stats;
            ParetoRow {
                method: agg.policy.family().name().to_string(),
                parameter: agg.policy.parameter(),
                events_mean: s.map_or(f64::NAN, |s| s.events_mean),
                events_std: s.map_or(f64::NAN, |s| s.events_std),
                j_mean: s.map_or(f64::NAN, |s| s.j_mean),
                j_std: s.map_or(f64::NAN, |s| s.j_std),
                complete: s.is_some(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub e_tx_per_event_mj: f64,
    pub baseline_mj: f64,
    pub battery_j: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            e_tx_per_event_mj: 5.0,
            baseline_mj: 140.0,
            battery_j: 40_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub events: f64,
    pub e_tx_per_event_mj: f64,
    pub baseline_mj: f64,
    pub battery_j: f64,
    pub comm_energy_mj: f64,
    pub total_energy_mj: f64,
    /// Whole missions the battery covers; `None` when a mission costs nothing.
    pub missions: Option<u64>,
}

/// Per-mission energy: `events · e_tx + baseline`, and how many missions fit in the battery.
pub fn energy_model(events: f64, params: &EnergyParams) -> Result<EnergyReport, ExperimentError> {
    if !(events >= 0.0 && events.is_finite()) {
        return Err(ExperimentError::InvalidEvents(events));
    }
    let comm = events * params.e_tx_per_event_mj;
    let total = comm + params.baseline_mj;
    let missions = (total > 0.0).then(|| (params.battery_j * 1000.0 / total).floor() as u64);
    Ok(EnergyReport {
        events,
        e_tx_per_event_mj: params.e_tx_per_event_mj,
        baseline_mj: params.baseline_mj,
        battery_j: params.battery_j,
        comm_energy_mj: comm,
        total_energy_mj: total,
        missions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// `(1 − events_a/events_b)·100`.
    pub event_reduction_pct: Option<f64>,
    /// `J_b / J_a`.
    pub performance_ratio: Option<f64>,
}

impl ReductionReport {
    pub fn from_means(events_a: f64, j_a: f64, events_b: f64, j_b: f64) -> Self {
        Self {
            event_reduction_pct: (events_b != 0.0).then(|| (1.0 - events_a / events_b) * 100.0),
            performance_ratio: (j_a != 0.0).then(|| j_b / j_a),
        }
    }
}

/// How method `a` compares against method `b`.
pub fn reduction_report(a: &McAggregate, b: &McAggregate) -> ReductionReport {
    match (a.stats, b.stats) {
        (Some(sa), Some(sb)) => {
            ReductionReport::from_means(sa.events_mean, sa.j_mean, sb.events_mean, sb.j_mean)
        }
        _ => ReductionReport {
            event_reduction_pct: None,
            performance_ratio: None,
        },
    }
}

/// Mean of `J + λN` recomputed from means; equals `total_mean` up to round-off.
pub fn total_from_means(stats: &McStats, lambda: f64) -> f64 {
    total_cost(stats.j_mean, stats.events_mean, lambda)
}
