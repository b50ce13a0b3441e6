use thiserror::Error;

/// Argument outside the domain of a geometric or channel operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("distance must be positive, got {0} m")]
    Distance(f64),
    #[error("frequency must be positive, got {0} Hz")]
    Frequency(f64),
    #[error("beamwidth must lie in (0, 360] degrees, got {0}")]
    Beamwidth(f64),
    #[error("beam index {id} out of range for codebook of {len}")]
    BeamIndex { id: usize, len: usize },
    #[error("transmitter and receiver poses coincide")]
    CoincidentPoses,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("time must be non-negative, got {0} s")]
    NegativeTime(f64),
    #[error("unrecognised codebook label {0:?}")]
    CodebookLabel(String),
}
