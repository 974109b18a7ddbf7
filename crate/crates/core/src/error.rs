use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} µm outside the valid range [{lo}, {hi}] µm of material `{material}`")]
    Domain {
        material: String,
        wavelength_um: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no guided mode for w = {width_um} µm, h = {height_um} µm at λ = {wavelength_um} µm")]
    Cutoff {
        width_um: f64,
        height_um: f64,
        wavelength_um: f64,
    },

    #[error("{field} field: {source}")]
    Field {
        field: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("geometry search failed: {0}")]
    Search(String),

    #[error("phasematching root solve did not converge: {0}")]
    NoRoot(String),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, below any field or stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Field { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by the user's input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), Error::Config(_) | Error::Parse { .. } | Error::Io { .. })
    }

    pub(crate) fn in_field(self, field: &'static str) -> Self {
        Error::Field {
            field,
            source: Box::new(self),
        }
    }

    /// True when the failure ultimately comes from an unguided field.
    pub fn is_cutoff(&self) -> bool {
        match self {
            Error::Cutoff { .. } => true,
            Error::Field { source, .. } | Error::Stage { source, .. } => source.is_cutoff(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
