use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
        })
    }
}

impl From<pide_control::Error> for CliError {
    fn from(e: pide_control::Error) -> Self {
        use pide_control::Error as E;
        match e {
            E::NotConverged {
                solver,
                iterations,
                residual,
                ref history,
            } => {
                let tail: Vec<String> = history
                    .iter()
                    .rev()
                    .take(5)
                    .rev()
                    .map(|r| format!("{r:.3e}"))
                    .collect();
                CliError::Solver(format!(
                    "{solver} stopped after {iterations} iterations at residual {residual:.3e}; last residuals [{}]",
                    tail.join(", ")
                ))
            }
            E::NonFinite(_) => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
