//! Array-agnostic speech enhancement at desk scale.
//!
//! The pipeline simulates acoustic scenes around wearable microphone arrays,
//! forms banks of delay-and-sum beams, assembles per-variant model inputs
//! (microphones, beams, or a bandwise mix of both), applies complex masks to a
//! reference channel, and scores the result with SI-SDR and bandwise SI-SDR.
//!
//! Modules follow the processing chain:
//!
//! * [`audio`] / [`stft`] / [`wav`] — buffers, STFT analysis/synthesis, band
//!   projection, and WAV I/O.
//! * [`geometry`] — wearable array layouts, perturbed variants, and poses.
//! * [`room`] — image-source room impulse responses and scene rendering.
//! * [`beamforming`] — frequency-dependent delay-and-sum weights and banks.
//! * [`hybrid`] — model-input parameterizations and reference selection.
//! * [`masking`] — oracle complex ratio masks and the external-mask seam.
//! * [`metrics`] — SI-SDR, bandwise SI-SDR, and group aggregation.
//! * [`harness`] — corpus ingestion, experiment presets, and orchestration.

pub mod audio;
pub mod beamforming;
mod error;
pub mod geometry;
pub mod harness;
pub mod hybrid;
pub mod masking;
pub mod metrics;
pub mod room;
pub mod stft;
pub mod wav;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use stft::{istft, stft, StftConfig, Spectrogram};
