use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input too short: {got} samples, need at least {need}")]
    InputTooShort { got: usize, need: usize },

    #[error("degenerate band [{lo}, {hi}) Hz: no STFT bins selected")]
    DegenerateBand { lo: f64, hi: f64 },

    #[error("channel-count mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("steering direction must be a unit vector, got norm {norm}")]
    NonUnitDirection { norm: f64 },

    #[error("infeasible T60: Sabine absorption {alpha:.4} >= 1 for this room")]
    InfeasibleT60 { alpha: f64 },

    #[error("{what} at ({x:.3}, {y:.3}, {z:.3}) m is outside the room")]
    OutsideRoom { what: &'static str, x: f64, y: f64, z: f64 },

    #[error("zero-power target utterance")]
    ZeroPowerTarget,

    #[error("zero reference signal")]
    ZeroReference,

    #[error("scene sampling infeasible after {attempts} attempts (seed {seed}): {reason}")]
    InfeasibleScene { attempts: usize, seed: u64, reason: String },

    #[error("empty corpus: no usable 16 kHz WAV files in {}", dir.display())]
    EmptyCorpus { dir: PathBuf },

    #[error("WAV error in {}: {reason}", path.display())]
    Wav { path: PathBuf, reason: String },

    #[error("mask file error in {}: {reason}", path.display())]
    MaskFormat { path: PathBuf, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
