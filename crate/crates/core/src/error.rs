use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violated a type or operation precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Asked for a path from a node to itself.
    #[error("empty path: source and destination are both node {0}")]
    EmptyPath(usize),

    /// First-fit ran out of wavelengths on some fiber segment.
    #[error(
        "wavelengths exhausted in step {step}: transfer {src}->{dst} needs wavelength index \
         {needed} but only {capacity} are available (peak link load {max_link_load})"
    )]
    WavelengthExhausted {
        step: u32,
        src: usize,
        dst: usize,
        needed: u32,
        capacity: u32,
        max_link_load: u32,
    },

    /// An operation that requires assigned wavelengths saw an unassigned transfer.
    #[error("incomplete wavelength assignment in step {step}: transfer {src}->{dst}")]
    IncompleteAssignment { step: u32, src: usize, dst: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
