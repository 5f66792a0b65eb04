use etclab_core::{
    AnalysisError, DesignError, ExperimentError, GateError, LinalgError, SimError, TriggerError,
};
use serde_json::json;
use thiserror::Error;

/// Process exit code for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Config = 1,
    Numeric = 2,
    Instability = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    NoCompletedRuns(String),
}

impl From<TriggerError> for CliError {
    fn from(e: TriggerError) -> Self {
        CliError::Sim(SimError::Trigger(e))
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        CliError::Design(DesignError::Linalg(e))
    }
}

fn sim_class(e: &SimError) -> ExitClass {
    match e {
        SimError::NonFiniteState { .. } => ExitClass::Instability,
        SimError::InvalidConfig(_) | SimError::Dimension(_) | SimError::Trigger(_) => {
            ExitClass::Config
        }
    }
}

impl CliError {
    pub fn class(&self) -> ExitClass {
        match self {
            CliError::Parse { .. }
            | CliError::Schema { .. }
            | CliError::Dimension(_)
            | CliError::Io { .. }
            | CliError::Argument(_) => ExitClass::Config,
            CliError::Design(DesignError::NotHurwitz) => ExitClass::Instability,
            CliError::Design(DesignError::Dimension(_)) => ExitClass::Config,
            CliError::Design(_) => ExitClass::Numeric,
            CliError::Analysis(_) => ExitClass::Numeric,
            CliError::Gate(GateError::InvalidSigma(_)) => ExitClass::Config,
            CliError::Gate(_) => ExitClass::Numeric,
            CliError::Sim(e) => sim_class(e),
            CliError::Experiment(ExperimentError::Sim(e)) => sim_class(e),
            CliError::Experiment(ExperimentError::AllUnstable) => ExitClass::Instability,
            CliError::Experiment(ExperimentError::WorkerPool(_)) => ExitClass::Numeric,
            CliError::Experiment(_) => ExitClass::Config,
            CliError::NoCompletedRuns(_) => ExitClass::Instability,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class() as i32
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "ParseError",
            CliError::Schema { .. } => "SchemaError",
            CliError::Dimension(_) => "DimensionError",
            CliError::Io { .. } => "IoError",
            CliError::Argument(_) => "ArgumentError",
            CliError::Design(DesignError::NotHurwitz) => "NotHurwitz",
            CliError::Design(_) => "DesignError",
            CliError::Analysis(_) => "AnalysisError",
            CliError::Gate(_) => "GateError",
            CliError::Sim(SimError::NonFiniteState { .. })
            | CliError::Experiment(ExperimentError::Sim(SimError::NonFiniteState { .. })) => {
                "NonFiniteState"
            }
            CliError::Sim(_) => "SimError",
            CliError::Experiment(ExperimentError::AllUnstable) => "AllUnstable",
            CliError::Experiment(_) => "ExperimentError",
            CliError::NoCompletedRuns(_) => "NoCompletedRuns",
        }
    }

    /// Machine-readable description written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            CliError::Parse { line, column, .. } => {
                body["line"] = json!(line);
                body["column"] = json!(column);
            }
            CliError::Schema { path, .. } => body["path"] = json!(path),
            _ => {}
        }
        json!({ "error": body })
    }
}
