//! Event-triggered control of linear time-invariant plants.
//!
//! The crate simulates a plant `ẋ = Ax + Bu` under zero-order-hold feedback
//! `u = −K·x(t_k)` where transmissions `t_k` are decided by a triggering rule:
//! the directional Lyapunov rule, the isotropic relative-error rule, or the
//! time-varying Lyapunov envelope. Around the simulator sit closed-form design
//! analysis (stability bound, inter-event time), a runtime safety gate for
//! black-box controllers, and a seeded Monte Carlo harness.
//!
//! ```
//! use etclab_core::{simulate, PlantDesign, SimConfig, TriggerPolicy};
//!
//! let design = PlantDesign::reference();
//! let run = simulate(
//!     &design,
//!     &TriggerPolicy::Directional { sigma: 0.1 },
//!     &[4.0, 3.0],
//!     &SimConfig { horizon_t: 5.0, ..SimConfig::default() },
//! )
//! .unwrap();
//! assert!(run.event_count() > 1);
//! ```

pub mod analysis;
pub mod experiments;
pub mod gate;
pub mod linalg;
pub mod plant;
pub mod rng;
pub mod sim;
pub mod trigger;

pub use analysis::{miet_bound, stability_bound, AnalysisError, MietReport, StabilityReport};
pub use experiments::{
    energy_model, grid_search, monte_carlo, pareto_table, reduction_report, EnergyParams,
    EnergyReport, ExperimentError, GridSearchResult, McAggregate, McConfig, McStats, ParetoRow,
    ReductionReport,
};
pub use gate::{
    gate_evaluate, gated_simulate, BlackBoxPolicy, GateConfig, GateDecision, GateError, GatedRun,
};
pub use linalg::{EigenExtremes, LinalgError, Matrix, Vector};
pub use plant::{DesignError, PlantDesign, PlantMatrices};
pub use sim::{cost_of, simulate, RunSummary, SimConfig, SimError, Trajectory};
pub use trigger::{TriggerDecision, TriggerError, TriggerFamily, TriggerPolicy};
