use alloc::string::String;

/// Errors produced anywhere in the toolkit core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),
    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("normalization error: {0}")]
    Normalization(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Input(alloc::format!($($arg)*))
    };
}
pub(crate) use input_err;
