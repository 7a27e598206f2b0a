use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 3 for numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<rabicorr::Error> for CliError {
    fn from(e: rabicorr::Error) -> Self {
        use rabicorr::Error as E;
        match e {
            E::InvalidDimension(_)
            | E::DimensionMismatch { .. }
            | E::InvalidParameter(_)
            | E::BasisMismatch(_)
            | E::NegativeTemperature(_) => CliError::Config(e.to_string()),
            E::NotHermitian { .. } | E::NotPositive { .. } | E::NonFinite { .. } | E::NonConvergence(_) | E::Eigensolver(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
