use thiserror::Error;

pub type Result<T> = std::result::Result<T, HssError>;

/// Every failure the library reports. The variant decides the CLI exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HssError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("physical-parameter error: {0}")]
    PhysicalParameter(String),
    #[error("wiring error: {0}")]
    Wiring(String),
    #[error("cross-reference error: {0}")]
    CrossReference(String),
    #[error("parse error in {file}: {message}")]
    Parse { file: String, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("singular operating point: {0}")]
    SingularOperatingPoint(String),
    #[error("well-posedness error: {message} (condition estimate {condition:e})")]
    WellPosedness { message: String, condition: f64 },
    #[error("pole proximity: s = {s} lies within {distance:e} of eigenvalue {nearest}")]
    PoleProximity {
        s: String,
        nearest: String,
        distance: f64,
    },
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl HssError {
    /// Short machine-readable category used in the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            HssError::Shape(_) => "shape",
            HssError::Config(_) => "config",
            HssError::Topology(_) => "topology",
            HssError::PhysicalParameter(_) => "physical_parameter",
            HssError::Wiring(_) => "wiring",
            HssError::CrossReference(_) => "cross_reference",
            HssError::Parse { .. } => "parse",
            HssError::Schema { .. } => "schema",
            HssError::Io(_) => "io",
            HssError::SingularOperatingPoint(_) => "singular_operating_point",
            HssError::WellPosedness { .. } => "well_posedness",
            HssError::PoleProximity { .. } => "pole_proximity",
            HssError::Numerical(_) => "numerical",
        }
    }

    /// 2 for anything the user can fix in the input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            HssError::SingularOperatingPoint(_)
            | HssError::WellPosedness { .. }
            | HssError::PoleProximity { .. }
            | HssError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn shape(msg: impl Into<String>) -> HssError {
    HssError::Shape(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> HssError {
    HssError::Config(msg.into())
}
