use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("network has no edges")]
    EmptyGraph,

    #[error("no drivable path from {from} to {to}")]
    Unreachable { from: String, to: String },

    #[error("no match candidates for sample {sample} within the radius limit")]
    NoCandidates { sample: usize },

    #[error("no feasible candidate chain reaches sample {sample}")]
    NoFeasibleChain { sample: usize },

    #[error("matching track {track} failed: {source}")]
    TrackMatch {
        track: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("every cross-validation fold was skipped")]
    AllFoldsSkipped,

    #[error("every boosting subsample failed")]
    AllSubsamplesFailed,

    #[error("no sample timestamps fit in a duration of {duration} s")]
    NoTimestamps { duration: f64 },

    #[error("no route with length in [{min}, {max}] m after {attempts} attempts")]
    RouteRejected { min: f64, max: f64, attempts: usize },

    #[error("both paths have zero length")]
    ZeroLengthPaths,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short stable identifier written into result files.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Parse(_) => "parse",
            Error::EmptyGraph => "empty_graph",
            Error::Unreachable { .. } => "unreachable",
            Error::NoCandidates { .. } => "no_candidates",
            Error::NoFeasibleChain { .. } => "no_feasible_chain",
            Error::TrackMatch { .. } => "track_match",
            Error::EigenNonConvergence { .. } => "eigen_nonconvergence",
            Error::AllFoldsSkipped => "all_folds_skipped",
            Error::AllSubsamplesFailed => "all_subsamples_failed",
            Error::NoTimestamps { .. } => "no_timestamps",
            Error::RouteRejected { .. } => "route_rejected",
            Error::ZeroLengthPaths => "zero_length_paths",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
