//! File writers. Floats go out as `{:.16e}` (17 significant digits, exact
//! round-trip), with a header row and a fixed column order in every CSV.

use std::fs;
use std::path::{Path, PathBuf};

use etclab_core::experiments::{GridSearchResult, RunOutcome, RunRecord};
use etclab_core::gate::GateLogEntry;
use etclab_core::{McAggregate, McStats, ParetoRow, Trajectory};
use serde::Serialize;

use crate::error::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Output directory; created on first use.
#[derive(Debug, Clone)]
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn new(path: impl Into<PathBuf>) -> Result<Self, CliError> {
        let path = path.into();
        fs::create_dir_all(&path).map_err(|e| io_err(&path, e))?;
        Ok(Self(path))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write_csv<I>(&self, name: &str, header: &[String], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Columns `t, x_1..x_n, V, event_flag, J_cumulative`.
pub fn trajectory_table(traj: &Trajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let mut head = vec!["t".to_string()];
    head.extend(indexed("x", traj.dim()));
    head.extend(header(&["V", "event_flag", "J_cumulative"]));
    let rows = (0..traj.len())
        .map(|i| {
            let mut row = vec![fmt_f64(traj.times[i])];
            row.extend(traj.state(i).iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(traj.v_values[i]));
            row.push(u8::from(traj.event_flags[i]).to_string());
            row.push(fmt_f64(traj.j_cumulative[i]));
            row
        })
        .collect();
    (head, rows)
}

/// Columns `t, accepted, margin, u_1..u_m`; the margin is empty when the gate is bypassed.
pub fn gate_log_table(log: &[GateLogEntry], m: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut head = header(&["t", "accepted", "margin"]);
    head.extend(indexed("u", m));
    let rows = log
        .iter()
        .map(|e| {
            let mut row = vec![
                fmt_f64(e.t),
                u8::from(e.accepted).to_string(),
                fmt_opt(e.margin),
            ];
            row.extend(e.applied_input.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    (head, rows)
}

/// One row per run and method: seed, initial state and outcome.
pub fn runs_table(aggregates: &[McAggregate], n: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut head = header(&["method", "parameter", "run_id", "seed"]);
    head.extend(indexed("x0", n));
    head.extend(header(&[
        "status",
        "events",
        "J_state",
        "J_total",
        "min_inter_event",
    ]));
    let mut rows = Vec::new();
    for agg in aggregates {
        for rec in &agg.records {
            rows.push(run_row(agg, rec));
        }
    }
    (head, rows)
}

fn run_row(agg: &McAggregate, rec: &RunRecord) -> Vec<String> {
    let mut row = vec![
        agg.policy.family().name().to_string(),
        fmt_f64(agg.policy.parameter()),
        rec.run_id.to_string(),
        rec.seed.to_string(),
    ];
    row.extend(rec.x0.iter().map(|&v| fmt_f64(v)));
    match &rec.outcome {
        RunOutcome::Completed(s) => row.extend([
            "completed".to_string(),
            s.event_count.to_string(),
            fmt_f64(s.j_state),
            fmt_f64(s.j_total),
            fmt_opt(s.min_inter_event),
        ]),
        RunOutcome::Failed(_) => row.extend([
            "diverged".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]),
    }
    row
}

fn stats_cells(stats: Option<McStats>) -> [String; 5] {
    match stats {
        Some(s) => [
            fmt_f64(s.events_mean),
            fmt_f64(s.events_std),
            fmt_f64(s.j_mean),
            fmt_f64(s.j_std),
            fmt_f64(s.total_mean),
        ],
        None => Default::default(),
    }
}

const STATS_COLUMNS: [&str; 5] = [
    "events_mean",
    "events_std",
    "J_mean",
    "J_std",
    "J_total_mean",
];

/// Comparison shape: one row per method.
pub fn aggregate_table(aggregates: &[McAggregate]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut head = header(&["method", "parameter", "n_completed", "n_failed"]);
    head.extend(header(&STATS_COLUMNS));
    let rows = aggregates
        .iter()
        .map(|agg| {
            let mut row = vec![
                agg.policy.family().name().to_string(),
                fmt_f64(agg.policy.parameter()),
                agg.n_completed.to_string(),
                agg.n_failed.to_string(),
            ];
            row.extend(stats_cells(agg.stats));
            row
        })
        .collect();
    (head, rows)
}

pub fn pareto_csv(rows: &[ParetoRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let head = header(&[
        "method",
        "parameter",
        "events_mean",
        "events_std",
        "J_mean",
        "J_std",
        "complete",
    ]);
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.method.clone(),
                fmt_f64(r.parameter),
                fmt_f64(r.events_mean),
                fmt_f64(r.events_std),
                fmt_f64(r.j_mean),
                fmt_f64(r.j_std),
                u8::from(r.complete).to_string(),
            ]
        })
        .collect();
    (head, rows)
}

/// Cost table of a grid search, one row per parameter value.
pub fn sweep_table(result: &GridSearchResult) -> (Vec<String>, Vec<Vec<String>>) {
    let mut head = vec![
        result.family.parameter_name().to_string(),
        "n_completed".to_string(),
        "n_failed".to_string(),
    ];
    head.extend(header(&STATS_COLUMNS));
    let rows = result
        .table
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt_f64(r.parameter),
                r.n_completed.to_string(),
                r.n_failed.to_string(),
            ];
            row.extend(stats_cells(r.stats));
            row
        })
        .collect();
    (head, rows)
}

pub fn decay_curve_table(curve: &[(f64, f64)]) -> (Vec<String>, Vec<Vec<String>>) {
    let rows = curve
        .iter()
        .map(|&(s, r)| vec![fmt_f64(s), fmt_f64(r)])
        .collect();
    (header(&["sigma", "decay_rate"]), rows)
}
