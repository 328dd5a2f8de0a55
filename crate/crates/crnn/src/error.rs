use crnn_core::certificates::CertError;
use crnn_core::deq::DeqError;
use crnn_core::lmi::LmiError;
use crnn_core::networks::NetworkError;
use crnn_core::sim::SimError;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed file, bad flag value or IO failure.
    #[error("{0}")]
    Input(String),
    /// The question was answered in the negative.
    #[error("{0}")]
    Negative(String),
    /// The solver or an iteration ran out of budget or lost accuracy.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Negative(_) => 1,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// Prefixes the message with `context`.
    pub fn context(self, context: &str) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{context}: {m}")),
            CliError::Negative(m) => CliError::Negative(format!("{context}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LmiError> for CliError {
    fn from(e: LmiError) -> Self {
        match e {
            LmiError::ShapeMismatch { .. } | LmiError::MissingVariable(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        let msg = e.to_string();
        match e {
            CertError::Infeasible { .. } | CertError::NoCertificate(_) => CliError::Negative(msg),
            CertError::InvalidInput(_) => CliError::Input(msg),
            CertError::Lmi(inner) => inner.into(),
            CertError::BudgetExhausted { .. } | CertError::Verification { .. } | CertError::Linalg(_) => {
                CliError::Numerical(msg)
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidInput(_) => CliError::Input(e.to_string()),
            SimError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        let msg = e.to_string();
        match e {
            NetworkError::Cert(inner) => inner.into(),
            NetworkError::Sim(inner) => inner.into(),
            NetworkError::BlockInconsistent { .. } => CliError::Numerical(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<DeqError> for CliError {
    fn from(e: DeqError) -> Self {
        let msg = e.to_string();
        match e {
            DeqError::Cert(inner) => inner.into(),
            DeqError::Sim(inner) => inner.into(),
            DeqError::Linalg(_) => CliError::Numerical(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<crnn_core::linalg::LinalgError> for CliError {
    fn from(e: crnn_core::linalg::LinalgError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
