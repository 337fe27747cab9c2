use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode output: {0}")]
    Encode(String),
}

/// Process exit status; larger values win when a run hits several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    Usage = 1,
    Solver = 2,
    FitUnstable = 3,
    Invariant = 4,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}
