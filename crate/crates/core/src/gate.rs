//! Lyapunov safety gate for black-box controllers.
//!
//! A proposal `u_nn` is accepted only when
//! `2xᵀPB(u_nn − u_safe) < σ·xᵀPx`, where `u_safe = −K·x(t_k)` is the input
//! certified by the last transmission. Rejected (or non-finite) proposals
//! fall back to `u_safe`. Run together with the directional trigger at the
//! same `σ`, both destabilizing terms in `V̇` are capped by `σxᵀPx`, so
//! `σ < λ_min(Q)/(2λ_max(P))` keeps the loop stable whatever the policy does.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Matrix, Vector};
use crate::plant::PlantDesign;
use crate::rng::SeededRng;
use crate::sim::{run_closed_loop, SimConfig, SimError, StepView, Trajectory};
use crate::trigger::TriggerPolicy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("gate sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// The proposal was rejected; `fallback` carries the decision actually applied.
    #[error("proposal has a non-finite component; applying the certified input")]
    NonFiniteProposal { fallback: GateDecision },
}

#[derive(Debug, Clone, Copy)]
pub struct GateConfig<'a> {
    design: &'a PlantDesign,
    sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub accepted: bool,
    /// Input sent to the plant: the proposal when accepted, `u_safe` otherwise.
    pub applied_input: Vector,
    /// `σxᵀPx − 2xᵀPB(u_nn − u_safe)`; acceptance needs it strictly positive.
    pub margin: f64,
}

impl<'a> GateConfig<'a> {
    pub fn new(design: &'a PlantDesign, sigma: f64) -> Result<Self, GateError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GateError::InvalidSigma(sigma));
        }
        Ok(Self { design, sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn design(&self) -> &'a PlantDesign {
        self.design
    }

    /// `λ_min(Q)/(2λ_max(P))`.
    pub fn bound(&self) -> f64 {
        self.design.q_eigen().lambda_min / (2.0 * self.design.p_eigen().lambda_max)
    }

    /// Set when `σ` sits at or above the bound and the stability guarantee lapses.
    pub fn exceeds_bound(&self) -> bool {
        self.sigma >= self.bound()
    }
}

/// Arithmetic needed by the gate kernel. Generic so tests can count operations.
pub(crate) trait GateScalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn zero() -> Self;
    fn two() -> Self;
}

impl GateScalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }

    #[inline]
    fn two() -> Self {
        2.0
    }
}

/// `σ·xᵀPx − 2·(xᵀPB)(u_nn − u_safe)` with `P` (n×n) and `PB` (n×m) row-major.
///
/// Costs exactly `n² + n + nm + m + 2` multiplications, independent of the data.
#[inline]
pub(crate) fn gate_margin<T: GateScalar>(
    x: &[T],
    u_nn: &[T],
    u_safe: &[T],
    p: &[T],
    pb: &[T],
    sigma: T,
) -> T {
    let n = x.len();
    let m = u_nn.len();
    let mut quad = T::zero();
    for i in 0..n {
        let mut row = T::zero();
        for j in 0..n {
            row = row + p[i * n + j] * x[j];
        }
        quad = quad + x[i] * row;
    }
    let mut cross = T::zero();
    for k in 0..m {
        let mut w = T::zero();
        for i in 0..n {
            w = w + x[i] * pb[i * m + k];
        }
        cross = cross + w * (u_nn[k] - u_safe[k]);
    }
    sigma * quad - T::two() * cross
}

/// Accept or reject one proposal.
pub fn gate_evaluate(
    x: &[f64],
    u_nn: &[f64],
    u_safe: &[f64],
    config: &GateConfig<'_>,
) -> Result<GateDecision, GateError> {
    let d = config.design;
    if x.len() != d.n() || u_nn.len() != d.m() || u_safe.len() != d.m() {
        return Err(GateError::Dimension(format!(
            "x {}, u_nn {}, u_safe {} for n = {}, m = {}",
            x.len(),
            u_nn.len(),
            u_safe.len(),
            d.n(),
            d.m()
        )));
    }
    if u_nn.iter().any(|v| !v.is_finite()) {
        return Err(GateError::NonFiniteProposal {
            fallback: GateDecision {
                accepted: false,
                applied_input: Vector::from(u_safe),
                margin: f64::NAN,
            },
        });
    }
    let margin = gate_margin(
        x,
        u_nn,
        u_safe,
        d.p().as_slice(),
        d.pb().as_slice(),
        config.sigma,
    );
    let accepted = margin > 0.0;
    Ok(GateDecision {
        accepted,
        applied_input: Vector::from(if accepted { u_nn } else { u_safe }),
        margin,
    })
}

/// What a black-box controller gets to see at each step.
#[derive(Debug, Clone, Copy)]
pub struct ProposalContext<'a> {
    pub t: f64,
    pub x: &'a [f64],
    /// Certified hold input `−K·x(t_k)`; policies are free to ignore it.
    pub u_safe: &'a [f64],
}

/// Any state-to-input map; the gate treats it as opaque.
pub trait BlackBoxPolicy {
    fn propose(&mut self, ctx: &ProposalContext<'_>) -> Vector;
}

impl<F> BlackBoxPolicy for F
where
    F: FnMut(&ProposalContext<'_>) -> Vector,
{
    fn propose(&mut self, ctx: &ProposalContext<'_>) -> Vector {
        self(ctx)
    }
}

/// `u = +c·K·x`: pushes the plant the wrong way.
#[derive(Debug, Clone)]
pub struct DestabilizingAdversary {
    k: Matrix,
    gain: f64,
}

impl DestabilizingAdversary {
    pub fn new(design: &PlantDesign, gain: f64) -> Self {
        Self {
            k: design.k().clone(),
            gain,
        }
    }
}

impl BlackBoxPolicy for DestabilizingAdversary {
    fn propose(&mut self, ctx: &ProposalContext<'_>) -> Vector {
        let mut u = self.k.mul_vec(ctx.x);
        for v in u.iter_mut() {
            *v *= self.gain;
        }
        u
    }
}

/// Independent uniform draws on `[-amplitude, amplitude]^m`.
#[derive(Debug, Clone)]
pub struct BoundedRandomPolicy {
    m: usize,
    amplitude: f64,
    rng: SeededRng,
}

impl BoundedRandomPolicy {
    pub fn new(m: usize, amplitude: f64, seed: u64) -> Self {
        Self {
            m,
            amplitude,
            rng: SeededRng::new(seed),
        }
    }
}

impl BlackBoxPolicy for BoundedRandomPolicy {
    fn propose(&mut self, _ctx: &ProposalContext<'_>) -> Vector {
        (0..self.m)
            .map(|_| self.rng.uniform(-self.amplitude, self.amplitude))
            .collect::<Vec<_>>()
            .into()
    }
}

/// Always proposes the certified input.
#[derive(Debug, Clone, Copy, Default)]
pub struct CertifiedHold;

impl BlackBoxPolicy for CertifiedHold {
    fn propose(&mut self, ctx: &ProposalContext<'_>) -> Vector {
        Vector::from(ctx.u_safe)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateLogEntry {
    pub t: f64,
    pub accepted: bool,
    /// `None` when the gate is bypassed.
    pub margin: Option<f64>,
    pub applied_input: Vector,
}

#[derive(Debug, Clone)]
pub struct GatedRun {
    pub trajectory: Trajectory,
    /// One entry per integration step.
    pub log: Vec<GateLogEntry>,
}

impl GatedRun {
    pub fn acceptance_rate(&self) -> f64 {
        if self.log.is_empty() {
            return 0.0;
        }
        self.log.iter().filter(|e| e.accepted).count() as f64 / self.log.len() as f64
    }
}

/// Closed loop where a black-box policy drives the plant through the gate.
///
/// Events come from the directional trigger at `trigger_sigma` and refresh
/// `u_safe`. Passing `gate = None` applies proposals unfiltered.
pub fn gated_simulate(
    design: &PlantDesign,
    policy: &mut dyn BlackBoxPolicy,
    trigger_sigma: f64,
    gate: Option<&GateConfig<'_>>,
    x0: &[f64],
    config: &SimConfig,
) -> Result<GatedRun, SimError> {
    let mut trigger = TriggerPolicy::Directional {
        sigma: trigger_sigma,
    }
    .arm(design)?;
    let steps = config.steps()?;
    let mut log = Vec::with_capacity(steps);

    let select = |view: StepView<'_>, u: &mut [f64]| {
        let ctx = ProposalContext {
            t: view.t,
            x: view.x,
            u_safe: view.u_safe,
        };
        let proposal = policy.propose(&ctx);
        let entry = match gate {
            Some(cfg) => {
                let decision = match gate_evaluate(view.x, &proposal, view.u_safe, cfg) {
                    Ok(d) => d,
                    Err(GateError::NonFiniteProposal { fallback }) => fallback,
                    // proposal length is the only thing that can be off here
                    Err(_) => GateDecision {
                        accepted: false,
                        applied_input: Vector::from(view.u_safe),
                        margin: f64::NAN,
                    },
                };
                GateLogEntry {
                    t: view.t,
                    accepted: decision.accepted,
                    margin: Some(decision.margin),
                    applied_input: decision.applied_input,
                }
            }
            None => GateLogEntry {
                t: view.t,
                accepted: true,
                margin: None,
                applied_input: proposal,
            },
        };
        if entry.applied_input.len() == u.len() {
            u.copy_from_slice(&entry.applied_input);
        } else {
            u.fill(f64::NAN);
        }
        log.push(entry);
    };

    let (_, traj) = run_closed_loop(design, &mut trigger, x0, config, true, select)?;
    Ok(GatedRun {
        trajectory: traj.expect("recording was requested"),
        log,
    })
}
