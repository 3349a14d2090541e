use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("invalid map geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate path: {0}")]
    DegeneratePath(&'static str),
    #[error("entry and exit leg are both {0:?}")]
    SameLeg(crate::world::Leg),
    #[error("no route from {from:?} to {to:?}")]
    NoRoute { from: crate::world::Leg, to: crate::world::Leg },
    #[error("paths share no waypoint")]
    NoConflict,
    #[error("waypoint index {index} out of range for path of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("pose projects beyond the path endpoints")]
    BeyondEndpoints,
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported checkpoint format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint dtype {found} does not match {expected}")]
    Dtype { found: String, expected: &'static str },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("scenario is infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss in update {update}: {detail}")]
    NonFiniteLoss { update: usize, detail: String },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Top-level error for the command entry points.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(String),
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad input: {0}")]
    Input(String),
}

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for validation problems, 2 for runtime aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Input(_) | HarnessError::MissingCheckpoint(_) => 1,
            HarnessError::Nn(NnError::Version { .. })
            | HarnessError::Nn(NnError::Dtype { .. })
            | HarnessError::Nn(NnError::Malformed(_))
            | HarnessError::Nn(NnError::Shape(_)) => 1,
            _ => 2,
        }
    }
}
