//! Event-triggering rules.
//!
//! Three policies share one decision interface:
//!
//! * **directional**: fire when `σ·xᵀPx − 2·xᵀ(PBK)e ≤ 0`. For fixed `x` the
//!   permitted errors form a half-space with normal `v = (PBK)ᵀx`, so errors
//!   orthogonal to `v` never trigger, however large.
//! * **isotropic**: fire when `‖e‖ ≥ σ‖x‖` (relative-error sphere).
//! * **time-varying**: fire when `V(x(t))` rises above the envelope
//!   `V(x(t_k))·exp(−α(t − t_k))` anchored at the last event.
//!
//! The first two depend only on the instantaneous `(x, e)`. The envelope rule
//! carries `(V_k, t_k)`, which the simulator refreshes at each event through
//! [`Trigger::record_event`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Matrix, Vector};
use crate::plant::PlantDesign;

/// Below this, `xᵀPx` (or `‖x‖²`, `V_k`) is treated as the equilibrium and nothing fires.
///
/// The smallest normal double: it removes the vacuous `0 ≤ 0` firing at the
/// origin without cutting into the range a converging run actually visits.
/// A larger floor such as `1e-18` is reached within the reference horizon,
/// after which the stale held input pushes `V` back up to the floor and the
/// scale-free triggers chatter there.
pub const ORIGIN_GUARD: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriggerError {
    #[error("evaluation time {t} precedes last event time {t_k}")]
    ClockViolation { t: f64, t_k: f64 },
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Which triggering rule, with its tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TriggerPolicy {
    Directional { sigma: f64 },
    Isotropic { sigma: f64 },
    TimeVarying { alpha: f64 },
}

/// Parameter-free tag of a [`TriggerPolicy`], used by grid searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerFamily {
    Directional,
    Isotropic,
    TimeVarying,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerDecision {
    pub fire: bool,
    /// Signed distance to the firing surface in the rule's own units. Non-positive
    /// whenever `fire` is set; it can also be non-positive without firing when the
    /// origin guard applies.
    pub margin: f64,
}

/// Snapshot `(V(x(t_k)), t_k)` held by the envelope rule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvelopeMemory {
    pub v_k: f64,
    pub t_k: f64,
}

impl TriggerFamily {
    pub fn with_parameter(self, value: f64) -> TriggerPolicy {
        match self {
            TriggerFamily::Directional => TriggerPolicy::Directional { sigma: value },
            TriggerFamily::Isotropic => TriggerPolicy::Isotropic { sigma: value },
            TriggerFamily::TimeVarying => TriggerPolicy::TimeVarying { alpha: value },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TriggerFamily::Directional => "directional",
            TriggerFamily::Isotropic => "isotropic",
            TriggerFamily::TimeVarying => "time_varying",
        }
    }

    pub fn parameter_name(self) -> &'static str {
        match self {
            TriggerFamily::TimeVarying => "alpha",
            _ => "sigma",
        }
    }
}

impl fmt::Display for TriggerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TriggerPolicy {
    pub fn family(&self) -> TriggerFamily {
        match self {
            TriggerPolicy::Directional { .. } => TriggerFamily::Directional,
            TriggerPolicy::Isotropic { .. } => TriggerFamily::Isotropic,
            TriggerPolicy::TimeVarying { .. } => TriggerFamily::TimeVarying,
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            TriggerPolicy::Directional { sigma } | TriggerPolicy::Isotropic { sigma } => sigma,
            TriggerPolicy::TimeVarying { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<(), TriggerError> {
        match *self {
            TriggerPolicy::Directional { sigma } | TriggerPolicy::Isotropic { sigma } => {
                if !(sigma > 0.0 && sigma < 1.0) {
                    return Err(TriggerError::InvalidParameter {
                        name: "sigma",
                        value: sigma,
                        reason: "must lie in (0, 1)",
                    });
                }
            }
            TriggerPolicy::TimeVarying { alpha } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(TriggerError::InvalidParameter {
                        name: "alpha",
                        value: alpha,
                        reason: "must be positive and finite",
                    });
                }
            }
        }
        Ok(())
    }

    /// Binds the policy to a design, producing a trigger ready for simulation.
    pub fn arm<'a>(&self, design: &'a PlantDesign) -> Result<Trigger<'a>, TriggerError> {
        self.validate()?;
        let rule = match *self {
            TriggerPolicy::Directional { sigma } => Rule::Directional { sigma },
            TriggerPolicy::Isotropic { sigma } => Rule::Isotropic { sigma },
            TriggerPolicy::TimeVarying { alpha } => Rule::TimeVarying {
                alpha,
                memory: EnvelopeMemory::default(),
            },
        };
        Ok(Trigger { design, rule })
    }
}

impl fmt::Display for TriggerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}={})",
            self.family(),
            self.family().parameter_name(),
            self.parameter()
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Directional { sigma: f64 },
    Isotropic { sigma: f64 },
    TimeVarying { alpha: f64, memory: EnvelopeMemory },
}

/// A policy bound to a plant design. Owns the envelope memory when there is one.
#[derive(Debug, Clone)]
pub struct Trigger<'a> {
    design: &'a PlantDesign,
    rule: Rule,
}

impl Trigger<'_> {
    pub fn evaluate(&self, x: &[f64], e: &[f64], t: f64) -> Result<TriggerDecision, TriggerError> {
        match self.rule {
            Rule::Directional { sigma } => Ok(directional_evaluate(
                x,
                e,
                sigma,
                self.design.p(),
                self.design.pbk(),
            )),
            Rule::Isotropic { sigma } => Ok(isotropic_evaluate(x, e, sigma)),
            Rule::TimeVarying { alpha, memory } => {
                timevarying_evaluate(x, t, memory, alpha, self.design.p())
            }
        }
    }

    /// Called by the simulator at every transmission instant.
    pub fn record_event(&mut self, x: &[f64], t: f64) {
        if let Rule::TimeVarying { ref mut memory, .. } = self.rule {
            *memory = EnvelopeMemory {
                v_k: self.design.lyapunov(x),
                t_k: t,
            };
        }
    }

    /// `None` for the stateless rules.
    pub fn memory(&self) -> Option<EnvelopeMemory> {
        match self.rule {
            Rule::TimeVarying { memory, .. } => Some(memory),
            _ => None,
        }
    }

    /// Set for a directional rule whose `σ` is at or above `λ_min(Q)/λ_max(P)`,
    /// where the decay guarantee no longer holds.
    pub fn exceeds_stability_bound(&self) -> bool {
        match self.rule {
            Rule::Directional { sigma } => {
                sigma >= self.design.q_eigen().lambda_min / self.design.p_eigen().lambda_max
            }
            _ => false,
        }
    }
}

/// Directional rule: `margin = σ·xᵀPx − 2·xᵀ(PBK)e`.
#[inline]
pub fn directional_evaluate(
    x: &[f64],
    e: &[f64],
    sigma: f64,
    p: &Matrix,
    pbk: &Matrix,
) -> TriggerDecision {
    let v = p.quad_form(x);
    let margin = sigma * v - 2.0 * pbk.bilinear(x, e);
    TriggerDecision {
        fire: margin <= 0.0 && v > ORIGIN_GUARD,
        margin,
    }
}

/// Isotropic rule in squared form: `margin = σ²‖x‖² − ‖e‖²`.
#[inline]
pub fn isotropic_evaluate(x: &[f64], e: &[f64], sigma: f64) -> TriggerDecision {
    let xx = dot(x, x);
    let margin = sigma * sigma * xx - dot(e, e);
    TriggerDecision {
        fire: margin <= 0.0 && xx > ORIGIN_GUARD,
        margin,
    }
}

/// Envelope rule: `margin = V_k·exp(−α(t − t_k)) − xᵀPx`.
///
/// Never fires at the event instant `t = t_k` itself, where the margin is zero
/// by construction.
#[inline]
pub fn timevarying_evaluate(
    x: &[f64],
    t: f64,
    memory: EnvelopeMemory,
    alpha: f64,
    p: &Matrix,
) -> Result<TriggerDecision, TriggerError> {
    if t < memory.t_k {
        return Err(TriggerError::ClockViolation { t, t_k: memory.t_k });
    }
    let margin = memory.v_k * (-alpha * (t - memory.t_k)).exp() - p.quad_form(x);
    Ok(TriggerDecision {
        fire: margin <= 0.0 && memory.v_k > ORIGIN_GUARD && t > memory.t_k,
        margin,
    })
}

/// Normal `v = (PBK)ᵀx` of the directional half-space.
pub fn halfspace_normal(x: &[f64], pbk: &Matrix) -> Vector {
    pbk.transpose().mul_vec(x)
}
