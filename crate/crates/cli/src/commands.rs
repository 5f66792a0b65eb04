//! One function per subcommand. Each writes its files into the output
//! directory and returns a JSON summary for standard output.

use etclab_core::analysis::{default_sigma_grid, stability_bound_on};
use etclab_core::experiments::tuned_policies;
use etclab_core::{
    energy_model, gated_simulate, grid_search, miet_bound, monte_carlo, pareto_table,
    reduction_report, simulate, GateConfig, McAggregate, SimError, TriggerFamily, TriggerPolicy,
};
use serde_json::{json, Value};

use crate::config::{tuned_parameter, RunSpec};
use crate::error::CliError;
use crate::output::{
    aggregate_table, decay_curve_table, gate_log_table, pareto_csv, runs_table, sweep_table,
    trajectory_table, OutDir,
};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub policy: Option<TriggerFamily>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
}

impl Overrides {
    /// Folds the overrides into `spec` and revalidates it.
    pub fn apply(&self, spec: &mut RunSpec) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            spec.mc.master_seed = seed;
        }
        if let Some(family) = self.policy {
            if family != spec.policy.family {
                spec.policy.family = family;
                spec.policy.sigma = None;
                spec.policy.alpha = None;
            }
            spec.sweep.family = family;
            spec.sweep.grid = None;
        }
        match (self.sigma, self.alpha, spec.policy.family) {
            (Some(_), _, TriggerFamily::TimeVarying) => {
                return Err(CliError::Argument(
                    "--sigma does not apply to the time_varying policy".into(),
                ))
            }
            (_, Some(_), TriggerFamily::Directional | TriggerFamily::Isotropic) => {
                return Err(CliError::Argument(format!(
                    "--alpha does not apply to the {} policy",
                    spec.policy.family
                )))
            }
            _ => {}
        }
        if self.sigma.is_some() {
            spec.policy.sigma = self.sigma;
        }
        if self.alpha.is_some() {
            spec.policy.alpha = self.alpha;
        }
        spec.validate()
    }
}

pub fn run_simulate(spec: &RunSpec, out: &OutDir) -> Result<Value, CliError> {
    let design = spec.design()?;
    let policy = spec.policy();
    let traj = simulate(&design, &policy, &spec.sim.x0, &spec.sim.config())?;
    let (head, rows) = trajectory_table(&traj);
    out.write_csv("trajectory.csv", &head, rows)?;
    let s = &traj.summary;
    let summary = json!({
        "policy": policy,
        "N": s.event_count,
        "J_state": s.j_state,
        "J_total": s.j_total,
        "lambda_cost": s.lambda_cost,
        "min_inter_event": s.min_inter_event,
        "final_state": s.final_state,
        "tail_negligible": s.tail_is_negligible(),
    });
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn stats_json(agg: &McAggregate) -> Value {
    json!({
        "policy": agg.policy,
        "n_completed": agg.n_completed,
        "n_failed": agg.n_failed,
        "stats": agg.stats,
    })
}

pub fn run_montecarlo(
    spec: &RunSpec,
    out: &OutDir,
    workers: usize,
    compare: bool,
) -> Result<Value, CliError> {
    let design = spec.design()?;
    let mc = spec.mc_config();
    let policies: Vec<TriggerPolicy> = if compare {
        tuned_policies().to_vec()
    } else {
        vec![spec.policy()]
    };
    let aggregates = policies
        .iter()
        .map(|p| monte_carlo(&design, p, &mc, workers))
        .collect::<Result<Vec<_>, _>>()?;

    let (head, rows) = runs_table(&aggregates, design.n());
    out.write_csv("runs.csv", &head, rows)?;
    let (head, rows) = aggregate_table(&aggregates);
    out.write_csv("aggregate.csv", &head, rows)?;

    let mut summary = json!({
        "n_runs": mc.n_runs,
        "master_seed": mc.master_seed,
        "lambda_cost": mc.sim.lambda_cost,
        "methods": aggregates.iter().map(stats_json).collect::<Vec<_>>(),
    });
    if compare {
        let (head, rows) = pareto_csv(&pareto_table(&aggregates));
        out.write_csv("pareto.csv", &head, rows)?;
        let by_family = |f: TriggerFamily| {
            aggregates
                .iter()
                .find(|a| a.policy.family() == f)
                .expect("all three tuned methods ran")
        };
        let proposed = by_family(TriggerFamily::Directional);
        let reduction = json!({
            "versus_isotropic": reduction_report(proposed, by_family(TriggerFamily::Isotropic)),
            "versus_time_varying": reduction_report(proposed, by_family(TriggerFamily::TimeVarying)),
        });
        out.write_json("reduction.json", &reduction)?;
        summary["reduction"] = reduction;
    }
    if let Some(empty) = aggregates.iter().find(|a| a.stats.is_none()) {
        return Err(CliError::NoCompletedRuns(format!(
            "every run of {} diverged",
            empty.policy
        )));
    }
    Ok(summary)
}

pub fn run_sweep(spec: &RunSpec, out: &OutDir, workers: usize) -> Result<Value, CliError> {
    let design = spec.design()?;
    let grid = spec.sweep.grid();
    let result = grid_search(
        &design,
        spec.sweep.family,
        &grid,
        &spec.mc_config(),
        workers,
    )?;
    let (head, rows) = sweep_table(&result);
    out.write_csv("sweep.csv", &head, rows)?;
    let best = json!({
        "family": result.family,
        "parameter_name": result.family.parameter_name(),
        "best_parameter": result.best_parameter,
        "best_stats": result.best_stats,
        "x0_head": result.table.first().map(|r| &r.x0_head),
    });
    out.write_json("best.json", &best)?;
    Ok(best)
}

/// `σ` for the inter-event bound: explicit, else the configured directional one.
pub fn miet_sigma(spec: &RunSpec, sigma: Option<f64>) -> f64 {
    sigma.unwrap_or_else(|| match spec.policy() {
        TriggerPolicy::Directional { sigma } => sigma,
        _ => tuned_parameter(TriggerFamily::Directional),
    })
}

pub fn run_miet(spec: &RunSpec, out: &OutDir, sigma: f64) -> Result<Value, CliError> {
    let design = spec.design()?;
    let report = miet_bound(&design, sigma)?;
    out.write_json("miet.json", &report)?;
    Ok(serde_json::to_value(report).expect("report serializes"))
}

pub fn run_stability(spec: &RunSpec, out: &OutDir) -> Result<Value, CliError> {
    let design = spec.design()?;
    let report = stability_bound_on(&design, &default_sigma_grid(&design));
    let (head, rows) = decay_curve_table(&report.decay_rate);
    out.write_csv("decay_curve.csv", &head, rows)?;
    let summary = json!({
        "sigma_max": report.sigma_max,
        "sigma_max_gate": report.sigma_max_gate,
        "lambda_min_Q": report.lambda_min_q,
        "lambda_max_P": report.lambda_max_p,
        "P": design.p().to_rows(),
    });
    out.write_json("stability.json", &summary)?;
    Ok(summary)
}

pub fn run_gate_demo(spec: &RunSpec, out: &OutDir, sigma: Option<f64>) -> Result<Value, CliError> {
    let design = spec.design()?;
    let mut block = spec.gate.clone();
    if let Some(s) = sigma {
        block.sigma_gate = s;
    }
    let gate = GateConfig::new(&design, block.sigma_gate)?;
    let trigger_sigma = block.trigger_sigma();
    let cfg = spec.sim.config();

    let mut policy = block.adversary.build(&design);
    let run = gated_simulate(
        &design,
        policy.as_mut(),
        trigger_sigma,
        Some(&gate),
        &spec.sim.x0,
        &cfg,
    )?;
    let (head, rows) = trajectory_table(&run.trajectory);
    out.write_csv("gated_trajectory.csv", &head, rows)?;
    let (head, rows) = gate_log_table(&run.log, design.m());
    out.write_csv("gate_log.csv", &head, rows)?;

    let mut policy = block.adversary.build(&design);
    let ungated = match gated_simulate(
        &design,
        policy.as_mut(),
        trigger_sigma,
        None,
        &spec.sim.x0,
        &cfg,
    ) {
        Ok(r) => json!({ "diverged": false, "final_state": r.trajectory.summary.final_state }),
        Err(SimError::NonFiniteState { t }) => json!({ "diverged": true, "t": t }),
        Err(e) => return Err(e.into()),
    };

    let s = &run.trajectory.summary;
    let summary = json!({
        "sigma_gate": gate.sigma(),
        "trigger_sigma": trigger_sigma,
        "sigma_max_gate": gate.bound(),
        "exceeds_bound": gate.exceeds_bound(),
        "adversary": block.adversary,
        "acceptance_rate": run.acceptance_rate(),
        "N": s.event_count,
        "J_state": s.j_state,
        "final_state": s.final_state,
        "final_norm": s.final_state.norm(),
        "ungated": ungated,
    });
    out.write_json("gate_summary.json", &summary)?;
    Ok(summary)
}

/// Event counts reported when none is given: the tuned isotropic and directional means.
pub const DEFAULT_ENERGY_EVENTS: [f64; 2] = [145.0, 82.0];

pub fn run_energy(spec: &RunSpec, out: &OutDir, events: Option<f64>) -> Result<Value, CliError> {
    let counts = events.map_or(DEFAULT_ENERGY_EVENTS.to_vec(), |e| vec![e]);
    let reports = counts
        .iter()
        .map(|&e| energy_model(e, &spec.energy))
        .collect::<Result<Vec<_>, _>>()?;
    out.write_json("energy.json", &reports)?;
    Ok(serde_json::to_value(reports).expect("reports serialize"))
}
