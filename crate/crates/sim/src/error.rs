use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fredkin_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{failed} of {total} sweep points failed")]
    PointsFailed { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Whether a core error comes from the numerics rather than from the inputs.
pub fn is_numerical(err: &fredkin_core::Error) -> bool {
    use fredkin_core::Error as E;
    matches!(
        err,
        E::Divergence { .. } | E::StepLimit(_) | E::CutoffReached { .. } | E::NonInvertible(_) | E::ConditionViolated(_)
    )
}

impl SimError {
    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Core(e) if is_numerical(e) => 3,
            SimError::Core(_) => 2,
            SimError::PointsFailed { .. } => 3,
            SimError::Io { .. } | SimError::Csv { .. } => 1,
        }
    }
}
