use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: {what} has {got} values, grid has {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite {what} at {wavelength_nm} nm")]
    NonFinite {
        what: &'static str,
        wavelength_nm: f64,
    },

    #[error("{what} must be strictly positive at {wavelength_nm} nm (got {value})")]
    NonPositive {
        what: &'static str,
        wavelength_nm: f64,
        value: f64,
    },

    #[error("filter transmission must lie in (0, 1] at {wavelength_nm} nm (got {value})")]
    FilterOutOfRange { wavelength_nm: f64, value: f64 },

    #[error(
        "positive transmittance {value_db} dB at {wavelength_nm} nm for a passive element \
         (swapped I_ref/I_mes columns? pass gain-allowed to override)"
    )]
    PositiveTransmittance { wavelength_nm: f64, value_db: f64 },

    #[error("linear ratio must be > 0 (got {0})")]
    NonPositiveRatio(f64),

    #[error("spectra are aligned to different grids")]
    GridMismatch,

    #[error(
        "target span {target_lo}..{target_hi} nm exceeds source span {source_lo}..{source_hi} nm"
    )]
    OutOfSpan {
        source_lo: f64,
        source_hi: f64,
        target_lo: f64,
        target_hi: f64,
    },

    #[error("{component}: {leg} spectrum missing")]
    MissingLeg { component: String, leg: String },

    #[error("unknown component '{0}'")]
    UnknownComponent(String),

    #[error("duplicate component id '{0}'")]
    DuplicateComponent(String),

    #[error("component '{component}': {msg}")]
    KindMismatch { component: String, msg: String },

    #[error("in component '{component}'")]
    InComponent {
        component: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("position {position} out of range (outbound has {len} elements)")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),

    #[error("invalid probability distribution: {0}")]
    InvalidProbabilities(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("invalid JSON in {path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_component(component: &str, source: Error) -> Self {
        Error::InComponent {
            component: component.to_string(),
            source: Box::new(source),
        }
    }
}
