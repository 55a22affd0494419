//! Error type shared by the functional side of the project.

use std::fmt;

/// Errors surfaced by scene I/O, pipeline compilation, and graph execution.
#[derive(Debug)]
pub enum CoreError {
    /// A pipeline asked for an asset the scene does not carry.
    MissingAsset {
        pipeline: String,
        asset: &'static str,
    },
    /// A runtime contract was violated (bad dimensions, negative density, ...).
    Contract(String),
    /// Scene directory or image file could not be read or parsed.
    Io(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::MissingAsset { pipeline, asset } => {
                write!(f, "pipeline `{pipeline}` requires asset `{asset}` which the scene does not provide")
            }
            CoreError::Contract(msg) => write!(f, "contract violation: {msg}"),
            CoreError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CoreError {}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
