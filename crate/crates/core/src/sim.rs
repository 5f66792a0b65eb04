//! Fixed-step simulation of the sampled-data loop `ẋ = Ax − BK·x(t_k)`.
//!
//! Each grid step first evaluates the trigger at the current `(x, e)`; on an
//! event the held state is refreshed (so `e = 0` right after it), then the
//! plant advances one RK4 step with the input frozen over the step. The
//! state cost `∫xᵀQx dt` is accumulated by the trapezoidal rule on the same
//! grid. Events are only detected at grid points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, Vector};
use crate::plant::PlantDesign;
use crate::trigger::{Trigger, TriggerError, TriggerPolicy};

/// Any state component beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Terminal `xᵀQx` below which truncating the cost integral at `T` is harmless.
pub const TAIL_TOLERANCE: f64 = 1e-8;

const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state diverged at t = {t} (|x| beyond {DIVERGENCE_LIMIT:e} or non-finite)")]
    NonFiniteState { t: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration and trigger-check step, seconds.
    pub step_h: f64,
    /// Simulated horizon, seconds.
    pub horizon_t: f64,
    /// Cost charged per transmission.
    pub lambda_cost: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_h: 1e-3,
            horizon_t: 50.0,
            lambda_cost: 0.015,
        }
    }
}

impl SimConfig {
    /// Number of integration steps; the grid has one more point than this.
    pub fn steps(&self) -> Result<usize, SimError> {
        let (h, t) = (self.step_h, self.horizon_t);
        if !(h > 0.0 && h.is_finite() && t.is_finite() && h <= t) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 < step_h <= horizon_t, got step_h={h}, horizon_t={t}"
            )));
        }
        if !(self.lambda_cost >= 0.0 && self.lambda_cost.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "lambda_cost must be non-negative, got {}",
                self.lambda_cost
            )));
        }
        let ratio = t / h;
        let steps = ratio.round();
        if (ratio - steps).abs() > GRID_TOL * ratio.max(1.0) {
            return Err(SimError::InvalidConfig(format!(
                "horizon_t/step_h = {ratio} is not an integer"
            )));
        }
        Ok(steps as usize)
    }
}

/// Scalar outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Transmissions, including the initial one at `t = 0`.
    pub event_count: usize,
    /// `∫₀ᵀ xᵀQx dt`.
    pub j_state: f64,
    /// `j_state + lambda_cost · event_count`.
    pub j_total: f64,
    pub lambda_cost: f64,
    /// Smallest gap between consecutive events; `None` with fewer than two events.
    pub min_inter_event: Option<f64>,
    pub final_state: Vector,
    /// `xᵀQx` at the horizon.
    pub terminal_stage_cost: f64,
}

impl RunSummary {
    pub fn tail_is_negligible(&self) -> bool {
        self.terminal_stage_cost < TAIL_TOLERANCE
    }
}

/// Time-indexed record of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    pub times: Vec<f64>,
    /// Row-major, `n` entries per grid point.
    pub states: Vec<f64>,
    pub v_values: Vec<f64>,
    /// Running trapezoidal `∫xᵀQx dt` at each grid point.
    pub j_cumulative: Vec<f64>,
    pub event_flags: Vec<bool>,
    pub event_times: Vec<f64>,
    pub summary: RunSummary,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.n..(i + 1) * self.n]
    }

    pub fn event_count(&self) -> usize {
        self.summary.event_count
    }

    pub fn j_state(&self) -> f64 {
        self.summary.j_state
    }

    pub fn j_total(&self) -> f64 {
        self.summary.j_total
    }

    pub fn min_inter_event(&self) -> Option<f64> {
        self.summary.min_inter_event
    }

    pub fn inter_event_intervals(&self) -> Vec<f64> {
        self.event_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// `J = J_state + λ·N`.
pub fn total_cost(j_state: f64, events: f64, lambda: f64) -> f64 {
    j_state + lambda * events
}

/// Total cost of a finished run under event weight `lambda`.
pub fn cost_of(traj: &Trajectory, lambda: f64) -> f64 {
    total_cost(traj.j_state(), traj.event_count() as f64, lambda)
}

/// Scratch buffers for allocation-free RK4 on `ẋ = Ax + Bu`.
struct Rk4 {
    bu: Vec<f64>,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            bu: vec![0.0; n],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            stage: vec![0.0; n],
        }
    }

    fn deriv(a: &Matrix, bu: &[f64], y: &[f64], out: &mut [f64]) {
        a.mul_vec_into(y, out);
        for (o, b) in out.iter_mut().zip(bu) {
            *o += b;
        }
    }

    /// Advances `x` in place by one step with `u` held constant.
    fn step(&mut self, a: &Matrix, b: &Matrix, x: &mut [f64], u: &[f64], h: f64) {
        b.mul_vec_into(u, &mut self.bu);
        let [k1, k2, k3, k4] = &mut self.k;
        Self::deriv(a, &self.bu, x, k1);
        for ((s, xi), ki) in self.stage.iter_mut().zip(x.iter()).zip(k1.iter()) {
            *s = xi + 0.5 * h * ki;
        }
        Self::deriv(a, &self.bu, &self.stage, k2);
        for ((s, xi), ki) in self.stage.iter_mut().zip(x.iter()).zip(k2.iter()) {
            *s = xi + 0.5 * h * ki;
        }
        Self::deriv(a, &self.bu, &self.stage, k3);
        for ((s, xi), ki) in self.stage.iter_mut().zip(x.iter()).zip(k3.iter()) {
            *s = xi + h * ki;
        }
        Self::deriv(a, &self.bu, &self.stage, k4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// One classical RK4 step of `ẋ = Ax + Bu` with `u = −K·x_held` frozen over the step.
pub fn rk4_step(design: &PlantDesign, x: &[f64], x_held: &[f64], h: f64) -> Vector {
    let u = design.k().mul_vec(x_held);
    let u: Vec<f64> = u.iter().map(|v| -v).collect();
    rk4_step_with_input(design, x, &u, h)
}

/// One classical RK4 step of `ẋ = Ax + Bu` for an explicit held input `u`.
pub fn rk4_step_with_input(design: &PlantDesign, x: &[f64], u: &[f64], h: f64) -> Vector {
    let mut out = x.to_vec();
    Rk4::new(x.len()).step(design.a(), design.b(), &mut out, u, h);
    Vector::from(out)
}

/// Per-step view handed to an input selector.
pub(crate) struct StepView<'s> {
    pub t: f64,
    pub x: &'s [f64],
    pub u_safe: &'s [f64],
}

/// Shared event loop. `select_input` chooses the input applied over the next
/// step given the certified hold input `u_safe = −K·x(t_k)`.
pub(crate) fn run_closed_loop<F>(
    design: &PlantDesign,
    trigger: &mut Trigger<'_>,
    x0: &[f64],
    config: &SimConfig,
    record: bool,
    mut select_input: F,
) -> Result<(RunSummary, Option<Trajectory>), SimError>
where
    F: FnMut(StepView<'_>, &mut [f64]),
{
    let n = design.n();
    let m = design.m();
    if x0.len() != n {
        return Err(SimError::Dimension(format!(
            "x0 has {} entries, plant has {n}",
            x0.len()
        )));
    }
    if x0
        .iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
    {
        return Err(SimError::NonFiniteState { t: 0.0 });
    }
    let steps = config.steps()?;
    let h = config.step_h;
    let (a, b, k, q) = (design.a(), design.b(), design.k(), design.q());

    let mut x = x0.to_vec();
    let mut x_held = x0.to_vec();
    let mut e = vec![0.0; n];
    let mut u_safe = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut rk4 = Rk4::new(n);

    let hold = |held: &[f64], u_safe: &mut [f64]| {
        k.mul_vec_into(held, u_safe);
        for v in u_safe.iter_mut() {
            *v = -*v;
        }
    };
    hold(&x_held, &mut u_safe);

    let mut traj = record.then(|| {
        let pts = steps + 1;
        Trajectory {
            n,
            times: Vec::with_capacity(pts),
            states: Vec::with_capacity(pts * n),
            v_values: Vec::with_capacity(pts),
            j_cumulative: Vec::with_capacity(pts),
            event_flags: Vec::with_capacity(pts),
            event_times: Vec::new(),
            summary: RunSummary {
                event_count: 0,
                j_state: 0.0,
                j_total: 0.0,
                lambda_cost: config.lambda_cost,
                min_inter_event: None,
                final_state: Vector::default(),
                terminal_stage_cost: 0.0,
            },
        }
    });

    let mut event_count = 0usize;
    let mut last_event = 0.0;
    let mut min_gap: Option<f64> = None;
    let mut event_times = Vec::new();
    let mut j_state = 0.0;
    let mut stage_cost = q.quad_form(&x);

    for i in 0..=steps {
        let t = i as f64 * h;

        let fired = if i == 0 {
            true
        } else {
            for ((ei, xi), hi) in e.iter_mut().zip(&x).zip(&x_held) {
                *ei = xi - hi;
            }
            trigger.evaluate(&x, &e, t)?.fire
        };
        if fired {
            x_held.copy_from_slice(&x);
            hold(&x_held, &mut u_safe);
            trigger.record_event(&x, t);
            if event_count > 0 {
                let gap = t - last_event;
                min_gap = Some(min_gap.map_or(gap, |g: f64| g.min(gap)));
            }
            event_count += 1;
            last_event = t;
            if record {
                event_times.push(t);
            }
        }

        if let Some(tr) = traj.as_mut() {
            tr.times.push(t);
            tr.states.extend_from_slice(&x);
            tr.v_values.push(design.lyapunov(&x));
            tr.j_cumulative.push(j_state);
            tr.event_flags.push(fired);
        }

        if i == steps {
            break;
        }

        select_input(
            StepView {
                t,
                x: &x,
                u_safe: &u_safe,
            },
            &mut u,
        );
        rk4.step(a, b, &mut x, &u, h);
        if x.iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(SimError::NonFiniteState { t: t + h });
        }
        let next_cost = q.quad_form(&x);
        j_state += 0.5 * h * (stage_cost + next_cost);
        stage_cost = next_cost;
    }

    let summary = RunSummary {
        event_count,
        j_state,
        j_total: total_cost(j_state, event_count as f64, config.lambda_cost),
        lambda_cost: config.lambda_cost,
        min_inter_event: min_gap,
        final_state: Vector::from(x),
        terminal_stage_cost: stage_cost,
    };
    if let Some(tr) = traj.as_mut() {
        tr.event_times = event_times;
        tr.summary = summary.clone();
    }
    Ok((summary, traj))
}

fn plain_input(view: StepView<'_>, u: &mut [f64]) {
    u.copy_from_slice(view.u_safe);
}

/// Simulates the event-triggered loop and records the full trajectory.
pub fn simulate(
    design: &PlantDesign,
    policy: &TriggerPolicy,
    x0: &[f64],
    config: &SimConfig,
) -> Result<Trajectory, SimError> {
    let mut trigger = policy.arm(design)?;
    let (_, traj) = run_closed_loop(design, &mut trigger, x0, config, true, plain_input)?;
    Ok(traj.expect("recording was requested"))
}

/// Same run as [`simulate`] without storing the trajectory.
pub fn simulate_summary(
    design: &PlantDesign,
    policy: &TriggerPolicy,
    x0: &[f64],
    config: &SimConfig,
) -> Result<RunSummary, SimError> {
    let mut trigger = policy.arm(design)?;
    let (summary, _) = run_closed_loop(design, &mut trigger, x0, config, false, plain_input)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use approx::assert_relative_eq;

    fn scalar_plant(a: f64) -> PlantDesign {
        // K = 0 keeps the loop open so the step sees only ẋ = a x.
        PlantDesign::new(
            Matrix::from_rows(&[[a]]).unwrap(),
            Matrix::from_rows(&[[1.0]]).unwrap(),
            Matrix::from_rows(&[[0.0]]).unwrap(),
            Matrix::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn rk4_constant_derivative_is_exact() {
        // A = 0 is not Hurwitz, so exercise the raw stepper directly.
        let a = Matrix::zeros(2, 2);
        let b = Matrix::identity(2);
        let mut x = vec![0.3, -0.2];
        Rk4::new(2).step(&a, &b, &mut x, &[1.0, 0.0], 0.1);
        assert_relative_eq!(x[0], 0.4, epsilon = 1e-15);
        assert_relative_eq!(x[1], -0.2, epsilon = 1e-15);
    }

    #[test]
    fn rk4_scalar_exponential() {
        let d = scalar_plant(-1.0);
        let x = rk4_step(&d, &[1.0], &[123.0], 0.1);
        assert!((x[0] - (-0.1_f64).exp()).abs() < 1e-7);
        assert_relative_eq!(x[0], 0.9048375, epsilon = 1e-7);
    }

    #[test]
    fn rk4_reference_plant_against_fine_steps() {
        let d = PlantDesign::reference();
        let held = [4.0, 3.0];
        let coarse = rk4_step(&d, &held, &held, 1e-3);
        let mut fine = held.to_vec();
        for _ in 0..1000 {
            fine = rk4_step(&d, &fine, &held, 1e-6).into_inner();
        }
        for i in 0..2 {
            assert!(
                (coarse[i] - fine[i]).abs() < 1e-10,
                "{i}: {} vs {}",
                coarse[i],
                fine[i]
            );
        }
    }

    #[test]
    fn zoh_input_uses_held_state_only() {
        let d = PlantDesign::reference();
        let a = rk4_step(&d, &[1.0, 1.0], &[4.0, 3.0], 1e-2);
        let u = [-(d.k().row(0)[0] * 4.0 + d.k().row(0)[1] * 3.0)];
        let b = rk4_step_with_input(&d, &[1.0, 1.0], &u, 1e-2);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_initial_state_stays_at_origin() {
        let d = PlantDesign::reference();
        for policy in [
            TriggerPolicy::Directional { sigma: 0.1 },
            TriggerPolicy::Isotropic { sigma: 0.7 },
            TriggerPolicy::TimeVarying { alpha: 0.5 },
        ] {
            let cfg = SimConfig {
                horizon_t: 1.0,
                ..SimConfig::default()
            };
            let tr = simulate(&d, &policy, &[0.0, 0.0], &cfg).unwrap();
            assert_eq!(tr.event_count(), 1);
            assert_eq!(tr.event_times, vec![0.0]);
            assert_eq!(tr.j_state(), 0.0);
            assert!(tr.states.iter().all(|&v| v == 0.0));
            assert_eq!(tr.min_inter_event(), None);
        }
    }

    #[test]
    fn trajectory_bookkeeping() {
        let d = PlantDesign::reference();
        let cfg = SimConfig {
            horizon_t: 5.0,
            ..SimConfig::default()
        };
        let tr = simulate(
            &d,
            &TriggerPolicy::Directional { sigma: 0.1 },
            &[4.0, 3.0],
            &cfg,
        )
        .unwrap();
        assert_eq!(tr.len(), 5001);
        assert_eq!(tr.event_times[0], 0.0);
        assert!(tr.event_times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(
            tr.event_flags.iter().filter(|&&f| f).count(),
            tr.event_count()
        );
        assert_eq!(tr.j_total(), tr.j_state() + 0.015 * tr.event_count() as f64);
        assert_eq!(*tr.j_cumulative.last().unwrap(), tr.j_state());
        let gaps = tr.inter_event_intervals();
        let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(tr.min_inter_event(), Some(min));
        assert_eq!(tr.state(0), &[4.0, 3.0]);

        let summary = simulate_summary(
            &d,
            &TriggerPolicy::Directional { sigma: 0.1 },
            &[4.0, 3.0],
            &cfg,
        )
        .unwrap();
        assert_eq!(summary, tr.summary);
    }

    #[test]
    fn cost_examples() {
        assert_relative_eq!(total_cost(13.43, 82.0, 0.015), 14.66, epsilon = 1e-12);
        assert_relative_eq!(total_cost(15.14, 145.3, 0.015), 17.3195, epsilon = 1e-12);
        assert_eq!(total_cost(0.0, 0.0, 0.7), 0.0);
    }

    #[test]
    fn divergence_is_reported() {
        // Open-loop pole at +2; the selector withholds the stabilizing input.
        let d = PlantDesign::new(
            Matrix::from_rows(&[[2.0]]).unwrap(),
            Matrix::from_rows(&[[1.0]]).unwrap(),
            Matrix::from_rows(&[[3.0]]).unwrap(),
            Matrix::identity(1),
        )
        .unwrap();
        let mut trig = TriggerPolicy::Directional { sigma: 0.5 }.arm(&d).unwrap();
        let res = run_closed_loop(
            &d,
            &mut trig,
            &[1.0],
            &SimConfig::default(),
            false,
            |_, u| {
                u[0] = 0.0;
            },
        );
        match res {
            Err(SimError::NonFiniteState { t }) => assert!(t > 10.0 && t < 20.0, "t = {t}"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            SimConfig {
                step_h: 0.0,
                ..SimConfig::default()
            },
            SimConfig {
                step_h: 100.0,
                ..SimConfig::default()
            },
            SimConfig {
                step_h: 0.003,
                horizon_t: 1.0,
                ..SimConfig::default()
            },
            SimConfig {
                lambda_cost: -1.0,
                ..SimConfig::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(cfg.steps(), Err(SimError::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
        assert_eq!(SimConfig::default().steps().unwrap(), 50_000);
    }

    #[test]
    fn rejects_wrong_initial_dimension() {
        let d = PlantDesign::reference();
        let res = simulate(
            &d,
            &TriggerPolicy::Directional { sigma: 0.1 },
            &[1.0],
            &SimConfig::default(),
        );
        assert!(matches!(res, Err(SimError::Dimension(_))));
    }
}
