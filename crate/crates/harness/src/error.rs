use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ttnpe_core::Error),
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }

    /// 1 config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        use ttnpe_core::Error as E;
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) | HarnessError::Io { .. } => 2,
            HarnessError::Core(e) => match e {
                E::InvalidArgument(_) => 1,
                E::InvalidShape(_)
                | E::ShapeMismatch(_)
                | E::InvalidModes(_)
                | E::TooFewModes(_)
                | E::Format(_)
                | E::Io(_)
                | E::Json(_) => 2,
                E::Infeasible(_)
                | E::NonFinite { .. }
                | E::GradientAudit(_)
                | E::MemoryBudget { .. }
                | E::Numeric(_) => 3,
            },
        }
    }
}
