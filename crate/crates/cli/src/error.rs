use std::fmt;
use std::path::Path;

use sensor_anomaly::cluster::ClusterError;
use sensor_anomaly::config::ConfigError;
use sensor_anomaly::detect::DetectError;
use sensor_anomaly::evaluate::EvalError;
use sensor_anomaly::ingest::IngestError;
use sensor_anomaly::pipeline::PipelineError;
use sensor_anomaly::stats::StatsError;
use sensor_anomaly::synth::SynthError;

/// Failure classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Internal = 1,
    Input = 2,
    Config = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Input,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Internal,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }

    pub fn read(path: &Path, e: impl fmt::Display) -> Self {
        Self::input(format!("cannot read {}: {e}", path.display()))
    }

    pub fn write(e: impl fmt::Display) -> Self {
        Self::internal(format!("cannot write output: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidConfig(_) => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::InvalidConfig(_) => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::InvalidConfig(_) => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidConfig(_) | EvalError::NonpositiveWeights => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InvalidPeriod => Self::config(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_config() {
            Self::config(e.to_string())
        } else {
            Self::input(e.to_string())
        }
    }
}
