//! Run configuration: a strict JSON schema whose defaults are the reference setup.
//!
//! Every block is optional. An empty object `{}` yields the reference plant
//! `A = [[0,1],[-2,3]]`, `B = [[0],[1]]`, `K = [[-1,4]]`, `Q = I`, the
//! directional trigger at `σ = 0.10`, `h = 1e-3`, `T = 50`, `λ = 0.015` and
//! `x0 = [4, 3]`. Unknown keys anywhere are rejected.
//!
//! ```json
//! {
//!   "system": { "A": [[0, 1], [-2, 3]], "B": [[0], [1]], "K": [[-1, 4]], "Q": [[1, 0], [0, 1]] },
//!   "policy": { "type": "directional", "sigma": 0.1 },
//!   "sim": { "step_h": 0.001, "horizon_T": 50, "lambda_cost": 0.015, "x0": [4, 3] },
//!   "mc": { "n_runs": 100, "x0_box": [[-5, 5], [-5, 5]], "master_seed": 20240601 },
//!   "gate": { "sigma_gate": 0.2, "adversary": { "type": "destabilizing", "gain": 1.0 } },
//!   "sweep": { "family": "directional" },
//!   "energy": { "e_tx_per_event_mj": 5, "baseline_mj": 140, "battery_j": 40000 }
//! }
//! ```

use std::path::Path;

use etclab_core::experiments::{default_grid, DEFAULT_MASTER_SEED};
use etclab_core::gate::{BoundedRandomPolicy, CertifiedHold, DestabilizingAdversary};
use etclab_core::{
    BlackBoxPolicy, EnergyParams, Matrix, McConfig, PlantDesign, PlantMatrices, SimConfig,
    TriggerFamily, TriggerPolicy,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemBlock {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
}

impl Default for SystemBlock {
    fn default() -> Self {
        let m = PlantMatrices::reference();
        Self {
            a: m.a.to_rows(),
            b: m.b.to_rows(),
            k: m.k.to_rows(),
            q: m.q.to_rows(),
        }
    }
}

/// Trigger selection. The parameter not used by the family must be absent;
/// a missing parameter takes the tuned default of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    #[serde(rename = "type", default = "default_family")]
    pub family: TriggerFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_family() -> TriggerFamily {
    TriggerFamily::Directional
}

impl Default for PolicyBlock {
    fn default() -> Self {
        Self {
            family: TriggerFamily::Directional,
            sigma: Some(0.10),
            alpha: None,
        }
    }
}

/// Tuned parameter of each family on the reference plant.
pub fn tuned_parameter(family: TriggerFamily) -> f64 {
    match family {
        TriggerFamily::Directional => 0.10,
        TriggerFamily::Isotropic => 0.70,
        TriggerFamily::TimeVarying => 0.50,
    }
}

impl PolicyBlock {
    pub fn to_policy(&self) -> Result<TriggerPolicy, CliError> {
        let (given, stray, stray_name) = match self.family {
            TriggerFamily::TimeVarying => (self.alpha, self.sigma, "sigma"),
            _ => (self.sigma, self.alpha, "alpha"),
        };
        if stray.is_some() {
            return Err(CliError::Schema {
                path: format!("policy.{stray_name}"),
                message: format!("not a parameter of the {} policy", self.family),
            });
        }
        let policy = self
            .family
            .with_parameter(given.unwrap_or_else(|| tuned_parameter(self.family)));
        policy.validate().map_err(|e| CliError::Schema {
            path: format!("policy.{}", self.family.parameter_name()),
            message: e.to_string(),
        })?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimBlock {
    pub step_h: f64,
    #[serde(rename = "horizon_T", alias = "horizon_t")]
    pub horizon_t: f64,
    pub lambda_cost: f64,
    pub x0: Vec<f64>,
}

impl Default for SimBlock {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            step_h: s.step_h,
            horizon_t: s.horizon_t,
            lambda_cost: s.lambda_cost,
            x0: vec![4.0, 3.0],
        }
    }
}

impl SimBlock {
    pub fn config(&self) -> SimConfig {
        SimConfig {
            step_h: self.step_h,
            horizon_t: self.horizon_t,
            lambda_cost: self.lambda_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McBlock {
    pub n_runs: usize,
    pub x0_box: Vec<[f64; 2]>,
    pub master_seed: u64,
}

impl Default for McBlock {
    fn default() -> Self {
        Self {
            n_runs: 100,
            x0_box: vec![[-5.0, 5.0], [-5.0, 5.0]],
            master_seed: DEFAULT_MASTER_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// `u = +gain·K·x`.
    Destabilizing { gain: f64 },
    /// Uniform noise on `[-amplitude, amplitude]^m`.
    BoundedRandom { amplitude: f64, seed: u64 },
    /// Always proposes the certified hold input.
    CertifiedHold,
}

impl AdversarySpec {
    pub fn build(&self, design: &PlantDesign) -> Box<dyn BlackBoxPolicy> {
        match *self {
            AdversarySpec::Destabilizing { gain } => {
                Box::new(DestabilizingAdversary::new(design, gain))
            }
            AdversarySpec::BoundedRandom { amplitude, seed } => {
                Box::new(BoundedRandomPolicy::new(design.m(), amplitude, seed))
            }
            AdversarySpec::CertifiedHold => Box::new(CertifiedHold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateBlock {
    pub sigma_gate: f64,
    /// Trigger threshold paired with the gate; defaults to `sigma_gate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_sigma: Option<f64>,
    pub adversary: AdversarySpec,
}

impl Default for GateBlock {
    fn default() -> Self {
        Self {
            sigma_gate: 0.2,
            trigger_sigma: None,
            adversary: AdversarySpec::Destabilizing { gain: 1.0 },
        }
    }
}

impl GateBlock {
    pub fn trigger_sigma(&self) -> f64 {
        self.trigger_sigma.unwrap_or(self.sigma_gate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub family: TriggerFamily,
    /// Parameter values to try; the family's default grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            family: TriggerFamily::Directional,
            grid: None,
        }
    }
}

impl SweepBlock {
    pub fn grid(&self) -> Vec<f64> {
        self.grid
            .clone()
            .unwrap_or_else(|| default_grid(self.family))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub system: SystemBlock,
    pub policy: PolicyBlock,
    pub sim: SimBlock,
    pub mc: McBlock,
    pub gate: GateBlock,
    pub sweep: SweepBlock,
    pub energy: EnergyParams,
}

/// Reads and validates a config file; `-` reads standard input.
pub fn parse_config_file(path: &Path) -> Result<RunSpec, CliError> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    }
    .map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Parses config text, applies defaults and checks dimensions across blocks.
pub fn parse_config(text: &str) -> Result<RunSpec, CliError> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: RunSpec = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => CliError::Schema {
                path,
                message: strip_position(&inner),
            },
            _ => CliError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner),
            },
        }
    })?;
    de.end().map_err(|inner| CliError::Parse {
        line: inner.line(),
        column: inner.column(),
        message: strip_position(&inner),
    })?;
    spec.validate()?;
    Ok(spec)
}

fn strip_position(err: &serde_json::Error) -> String {
    let full = err.to_string();
    match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    }
}

fn matrix(block: &str, rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Dimension(format!("{block} is empty")));
    }
    Matrix::from_rows(rows)
        .map_err(|_| CliError::Dimension(format!("{block} rows have different lengths")))
}

impl RunSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("RunSpec serializes")
    }

    pub fn plant_matrices(&self) -> Result<PlantMatrices, CliError> {
        Ok(PlantMatrices {
            a: matrix("system.A", &self.system.a)?,
            b: matrix("system.B", &self.system.b)?,
            k: matrix("system.K", &self.system.k)?,
            q: matrix("system.Q", &self.system.q)?,
        })
    }

    /// Dimensional consistency of all blocks; no numerics beyond shapes.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = self.plant_matrices()?;
        let n = m.a.rows();
        let dims = |what: &str, r: usize, c: usize, er: usize, ec: usize| {
            if (r, c) == (er, ec) {
                Ok(())
            } else {
                Err(CliError::Dimension(format!(
                    "{what} is {r}x{c}, expected {er}x{ec} to match system.A"
                )))
            }
        };
        dims("system.A", n, m.a.cols(), n, n)?;
        let inputs = m.b.cols();
        dims("system.B", m.b.rows(), inputs, n, inputs)?;
        dims("system.K", m.k.rows(), m.k.cols(), inputs, n)?;
        dims("system.Q", m.q.rows(), m.q.cols(), n, n)?;
        if self.sim.x0.len() != n {
            return Err(CliError::Dimension(format!(
                "sim.x0 has {} entries but system.A is {n}x{n}",
                self.sim.x0.len()
            )));
        }
        if self.mc.x0_box.len() != n {
            return Err(CliError::Dimension(format!(
                "mc.x0_box has {} intervals but system.A is {n}x{n}",
                self.mc.x0_box.len()
            )));
        }
        self.policy.to_policy()?;
        Ok(())
    }

    pub fn design(&self) -> Result<PlantDesign, CliError> {
        Ok(PlantDesign::from_matrices(self.plant_matrices()?)?)
    }

    pub fn policy(&self) -> TriggerPolicy {
        self.policy.to_policy().expect("validated at parse time")
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_runs: self.mc.n_runs,
            x0_box: self.mc.x0_box.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            master_seed: self.mc.master_seed,
            sim: self.sim.config(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_setup() {
        let spec = parse_config("{}").unwrap();
        assert_eq!(spec, RunSpec::default());
        assert_eq!(parse_config("").unwrap(), spec);
        assert_eq!(spec.system.a, vec![vec![0.0, 1.0], vec![-2.0, 3.0]]);
        assert_eq!(spec.system.b, vec![vec![0.0], vec![1.0]]);
        assert_eq!(spec.system.k, vec![vec![-1.0, 4.0]]);
        assert_eq!(spec.system.q, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(spec.policy(), TriggerPolicy::Directional { sigma: 0.10 });
        assert_eq!(spec.sim.horizon_t, 50.0);
        assert_eq!(spec.sim.lambda_cost, 0.015);
        assert_eq!(spec.sim.step_h, 1e-3);
        assert_eq!(spec.gate.trigger_sigma(), 0.2);
    }

    #[test]
    fn sigma_override_keeps_other_defaults() {
        let spec = parse_config(r#"{"policy": {"sigma": 0.3}}"#).unwrap();
        assert_eq!(spec.policy(), TriggerPolicy::Directional { sigma: 0.3 });
        assert_eq!(spec.sim, SimBlock::default());
        assert_eq!(spec.system, SystemBlock::default());

        let spec = parse_config(r#"{"policy": {"type": "time_varying"}}"#).unwrap();
        assert_eq!(spec.policy(), TriggerPolicy::TimeVarying { alpha: 0.5 });
    }

    #[test]
    fn wrong_gain_shape_is_a_dimension_error() {
        let err = parse_config(r#"{"system": {"A": [[0,1],[-2,3]], "B": [[0],[1]], "K": [[1,0],[0,1]], "Q": [[1,0],[0,1]]}}"#)
            .unwrap_err();
        assert!(
            matches!(err, CliError::Dimension(ref m) if m.contains("system.K")),
            "{err}"
        );
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = parse_config(r#"{"sim": {"step_h": 0.001, "horizon": 5}}"#).unwrap_err();
        match err {
            CliError::Schema { path, message } => {
                assert!(path.starts_with("sim"), "{path}");
                assert!(message.contains("horizon"), "{message}");
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            parse_config(r#"{"extra": 1}"#),
            Err(CliError::Schema { .. })
        ));
        assert!(matches!(
            parse_config(r#"{"policy": {"type": "isotropic", "alpha": 0.5}}"#),
            Err(CliError::Schema { .. })
        ));
        assert!(matches!(
            parse_config(r#"{"policy": {"sigma": 1.5}}"#),
            Err(CliError::Schema { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_config("{\n  \"sim\": {\n    \"x0\": [1, 2,,]\n  }\n}").unwrap_err();
        match err {
            CliError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other}"),
        }
        assert!(matches!(parse_config("{} {}"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn mismatched_blocks_are_reported() {
        let err = parse_config(
            r#"{"sim": {"step_h": 0.001, "horizon_T": 5, "lambda_cost": 0, "x0": [1, 2, 3]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Dimension(ref m) if m.contains("sim.x0")));
        let err = parse_config(r#"{"mc": {"n_runs": 3, "x0_box": [[0, 1]], "master_seed": 1}}"#)
            .unwrap_err();
        assert!(matches!(err, CliError::Dimension(ref m) if m.contains("mc.x0_box")));
        let err = parse_config(
            r#"{"system": {"A": [[0,1],[-2]], "B": [[0],[1]], "K": [[-1,4]], "Q": [[1,0],[0,1]]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Dimension(_)));
    }
}
