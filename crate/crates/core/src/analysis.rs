//! Design-time guarantees for the directional trigger.
//!
//! With `V = xᵀPx`, holding `2xᵀPBKe ≤ σxᵀPx` between events gives
//! `V̇ ≤ −(λ_min(Q) − σλ_max(P))‖x‖²`, so any `σ < λ_min(Q)/λ_max(P)` keeps the
//! loop asymptotically stable. A safety gate that spends a second `σxᵀPx`
//! budget on policy deviations needs half of that bound.
//!
//! The inter-event bound follows the ratio `ξ = ‖e‖/‖x‖`, which starts at zero
//! after every event, obeys `ξ̇ ≤ L₁ξ² + L₂ξ + L₃` and must reach
//! `Γ = σλ_min(P)/(2‖PBK‖)` before the trigger can fire.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::PlantDesign;

const SIMPSON_REL_TOL: f64 = 1e-10;
const SIMPSON_MAX_DEPTH: u32 = 50;

/// Points in the default decay-rate grid.
pub const DEFAULT_CURVE_POINTS: usize = 111;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("PBK vanishes: the sampling error never couples into V, no finite threshold exists")]
    ZeroCoupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `λ_min(Q)/λ_max(P)`.
    pub sigma_max: f64,
    /// `sigma_max / 2`, the safety-gate bound.
    pub sigma_max_gate: f64,
    pub lambda_min_q: f64,
    pub lambda_max_p: f64,
    /// `(σ, λ_min(Q) − σλ_max(P))` samples.
    pub decay_rate: Vec<(f64, f64)>,
}

impl StabilityReport {
    pub fn decay_rate_at(&self, sigma: f64) -> f64 {
        self.lambda_min_q - sigma * self.lambda_max_p
    }

    /// Remaining headroom below the bound, in percent.
    pub fn margin_pct(&self, sigma: f64) -> f64 {
        (self.sigma_max - sigma) / self.sigma_max * 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MietReport {
    pub sigma: f64,
    /// `‖BK‖`.
    #[serde(rename = "L1")]
    pub l1: f64,
    /// `‖A_cl‖ + ‖BK‖`.
    #[serde(rename = "L2")]
    pub l2: f64,
    /// `‖A_cl‖`.
    #[serde(rename = "L3")]
    pub l3: f64,
    /// Ratio threshold `σλ_min(P)/(2‖PBK‖)`.
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    /// Lower bound on the time between events, seconds.
    pub tau: f64,
}

pub fn stability_bound(design: &PlantDesign) -> StabilityReport {
    stability_bound_on(design, &[])
}

/// [`stability_bound`] with decay-rate samples on `sigma_grid`.
pub fn stability_bound_on(design: &PlantDesign, sigma_grid: &[f64]) -> StabilityReport {
    let lambda_min_q = design.q_eigen().lambda_min;
    let lambda_max_p = design.p_eigen().lambda_max;
    let sigma_max = lambda_min_q / lambda_max_p;
    StabilityReport {
        sigma_max,
        sigma_max_gate: sigma_max / 2.0,
        lambda_min_q,
        lambda_max_p,
        decay_rate: decay_rate_curve(design, sigma_grid),
    }
}

/// `λ_min(Q) − σλ_max(P)` at each grid point.
pub fn decay_rate_curve(design: &PlantDesign, sigma_grid: &[f64]) -> Vec<(f64, f64)> {
    let lambda_min_q = design.q_eigen().lambda_min;
    let lambda_max_p = design.p_eigen().lambda_max;
    sigma_grid
        .iter()
        .map(|&s| (s, lambda_min_q - s * lambda_max_p))
        .collect()
}

/// 111 evenly spaced points on `[0, 1.1·sigma_max]`.
pub fn default_sigma_grid(design: &PlantDesign) -> Vec<f64> {
    let top = 1.1 * design.q_eigen().lambda_min / design.p_eigen().lambda_max;
    let last = (DEFAULT_CURVE_POINTS - 1) as f64;
    (0..DEFAULT_CURVE_POINTS)
        .map(|i| top * i as f64 / last)
        .collect()
}

/// Minimum inter-event time bound for the directional trigger at `sigma`.
pub fn miet_bound(design: &PlantDesign, sigma: f64) -> Result<MietReport, AnalysisError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(AnalysisError::InvalidSigma(sigma));
    }
    if design.norm_pbk() == 0.0 {
        return Err(AnalysisError::ZeroCoupling);
    }
    let l1 = design.norm_bk();
    let l3 = design.norm_a_cl();
    let l2 = l1 + l3;
    let gamma = sigma * design.p_eigen().lambda_min / (2.0 * design.norm_pbk());
    let tau = adaptive_simpson(
        |xi| 1.0 / ((l1 * xi + l2) * xi + l3),
        0.0,
        gamma,
        SIMPSON_REL_TOL,
    );
    Ok(MietReport {
        sigma,
        l1,
        l2,
        l3,
        gamma,
        tau,
    })
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
