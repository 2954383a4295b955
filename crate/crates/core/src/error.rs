use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("binding error: no value for parameter `{0}`")]
    Binding(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The post-selection probability vanished, so the normalized fidelity
    /// is undefined at this parameter point.
    #[error("degenerate fidelity: post-selection probability {0:.3e} is below threshold")]
    DegenerateFidelity(f64),

    #[error("cannot differentiate through gate `{0}`")]
    Differentiation(String),

    #[error("setup file: {0}")]
    SetupFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
