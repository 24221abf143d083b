use geotax_core::GeoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] GeoError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("plot data is not available for '{0}' reports (supported: gap, convergence, triangle sweep)")]
    UnsupportedReportKind(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for numerical and conditioning failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    /// One-line suggestion printed after the error.
    pub fn hint(&self) -> &'static str {
        match self {
            CliError::Core(GeoError::NoisePanic { .. }) => "increase the step size (--h / --h-cubic)",
            CliError::Core(GeoError::Conditioning(_)) => "reduce the step size or disable Richardson",
            CliError::Core(GeoError::Domain(_)) => "move the point or shrink the step so every stencil point stays in the domain",
            CliError::Core(GeoError::RejectionOverflow { .. }) => "use legs with less mass below x = -1",
            CliError::Core(GeoError::OrthogonalLink { .. }) => "insert an intermediate state between orthogonal neighbours",
            CliError::UnsupportedReportKind(_) => "use --format json or csv",
            CliError::Io { .. } => "check the path and permissions",
            CliError::Json { .. } => "check that the file is valid JSON",
            _ => "run `geo help` for the command grammar",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
