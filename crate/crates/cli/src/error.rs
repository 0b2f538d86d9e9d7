use elm_ctr::ElmError;

#[derive(Debug)]
pub enum CliError {
    /// Rejected command line, or a help/version request.
    Usage(clap::Error),
    Config(String),
    Run(ElmError),
}

impl CliError {
    /// 0 success, 1 configuration, 2 data, 3 numeric.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Run(e) => match e {
                ElmError::Singular { .. } | ElmError::Numeric(_) | ElmError::Divergence { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ElmError> for CliError {
    fn from(e: ElmError) -> Self {
        CliError::Run(e)
    }
}
