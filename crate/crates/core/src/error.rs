use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A kernel profile reaches zero on the range where the theory needs a
    /// positive lower bound.
    #[error("degenerate kernel: profile vanishes at r = {radius}")]
    DegenerateKernel { radius: f64 },

    #[error("time {t} is outside the covered range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("numerical blow-up at t = {t}")]
    BlowUp { t: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
