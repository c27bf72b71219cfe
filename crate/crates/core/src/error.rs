use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {details}")]
    Shape { op: &'static str, details: String },

    #[error("loss node must be scalar, got {numel} values")]
    NonScalarLoss { numel: usize },

    #[error("all-zero input to {0}")]
    ZeroInput(&'static str),

    #[error("no packet detected")]
    NoPacket,

    #[error("zero reference value on subcarrier bin {bin}")]
    ZeroReference { bin: usize },

    #[error("perturbation out of bounds at bin {bin}: {what}")]
    PerturbationBounds { bin: usize, what: String },

    #[error("empty codebook")]
    EmptyCodebook,

    #[error("training diverged (non-finite loss) at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
