use std::fmt;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { kind: ExitKind::Usage, msg: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self { kind: ExitKind::Data, msg: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self { kind: ExitKind::Numerical, msg: msg.into() }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Attach context and classify a library error.
pub trait Context<T> {
    fn data_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T>;
    fn num_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E: fmt::Display> Context<T> for Result<T, E> {
    fn data_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::data(format!("{}: {e}", ctx())))
    }

    fn num_ctx(self, ctx: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::numerical(format!("{}: {e}", ctx())))
    }
}

/// Classify a POPF driver error: infeasibility and sampler breakdowns are
/// numerical, everything else is a data problem.
pub fn popf_error(e: popf_core::popf::PopfError) -> CliError {
    use popf_core::popf::PopfError as P;
    match e {
        P::TooManyInfeasible { .. } | P::Sampler(_) | P::ZeroReference => CliError::numerical(e.to_string()),
        P::MissingReference => CliError::data("missing reference: run `popf reference` or pass --make-reference"),
        other => CliError::data(other.to_string()),
    }
}
