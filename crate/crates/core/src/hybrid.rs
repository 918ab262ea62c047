//! Model-input parameterization: the two baselines, three hybrids, bandwise
//! assembly, and reference-channel selection.

use ndarray::{s, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::BeamSpectrogram;
use crate::error::{Error, Result};
use crate::geometry::MicArray;
use crate::stft::{Spectrogram, StftConfig};

/// Default bandwise cutoff frequency in Hz.
pub const DEFAULT_CUTOFF_HZ: f64 = 1500.0;

/// Mask-model input source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Mics,
    Beams,
    Bandwise,
}

/// Which signal the mask is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    FrontalMic,
    ForwardBeam,
}

/// The five input/reference parameterizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Baseline1,
    Baseline2,
    Hybrid1,
    Hybrid2,
    Hybrid3,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Baseline1,
        Variant::Baseline2,
        Variant::Hybrid1,
        Variant::Hybrid2,
        Variant::Hybrid3,
    ];

    pub fn input_kind(self) -> InputKind {
        match self {
            Variant::Baseline1 => InputKind::Mics,
            Variant::Baseline2 | Variant::Hybrid1 => InputKind::Beams,
            Variant::Hybrid2 | Variant::Hybrid3 => InputKind::Bandwise,
        }
    }

    pub fn reference_kind(self) -> ReferenceKind {
        match self {
            Variant::Baseline1 | Variant::Hybrid1 | Variant::Hybrid3 => ReferenceKind::FrontalMic,
            Variant::Baseline2 | Variant::Hybrid2 => ReferenceKind::ForwardBeam,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline1 => "baseline1",
            Variant::Baseline2 => "baseline2",
            Variant::Hybrid1 => "hybrid1",
            Variant::Hybrid2 => "hybrid2",
            Variant::Hybrid3 => "hybrid3",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline1" | "b1" => Ok(Variant::Baseline1),
            "baseline2" | "b2" => Ok(Variant::Baseline2),
            "hybrid1" | "h1" => Ok(Variant::Hybrid1),
            "hybrid2" | "h2" => Ok(Variant::Hybrid2),
            "hybrid3" | "h3" => Ok(Variant::Hybrid3),
            other => Err(Error::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

/// A variant plus its bandwise cutoff frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub cutoff_hz: f64,
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self { variant, cutoff_hz: DEFAULT_CUTOFF_HZ }
    }
}

/// STFT bin index of the cutoff frequency, round-half-up on `f_c / bin_width`.
pub fn cutoff_bin(cutoff_hz: f64, config: &StftConfig, sample_rate: u32) -> Result<usize> {
    let nyquist = sample_rate as f64 / 2.0;
    if cutoff_hz <= 0.0 || cutoff_hz >= nyquist {
        return Err(Error::InvalidConfig(format!(
            "cutoff {cutoff_hz} Hz outside (0, {nyquist})"
        )));
    }
    Ok((cutoff_hz / config.bin_width(sample_rate)).round() as usize)
}

/// Model input tensor with bandwise provenance: bins below `cutoff_bin` come
/// from the microphones, bins at or above it from the beamformers.
#[derive(Debug, Clone)]
pub struct HybridInput {
    pub data: Array3<Complex64>,
    pub cutoff_bin: usize,
    pub config: StftConfig,
    pub sample_rate: u32,
}

impl HybridInput {
    /// Bin range copied from the microphone spectrogram.
    pub fn mic_bins(&self) -> std::ops::Range<usize> {
        0..self.cutoff_bin
    }

    /// Bin range copied from the beamformer outputs.
    pub fn beam_bins(&self) -> std::ops::Range<usize> {
        self.cutoff_bin..self.data.shape()[1]
    }
}

/// Stack microphone bins below `k_c` and beamformer bins at or above it.
/// Copies are bit-exact; requires equal channel counts (L = D).
pub fn assemble_bandwise(
    mic_spec: &Spectrogram,
    beam_spec: &BeamSpectrogram,
    k_c: usize,
) -> Result<HybridInput> {
    let beams = &beam_spec.spec;
    if mic_spec.channels() != beams.channels() {
        return Err(Error::ChannelMismatch { left: mic_spec.channels(), right: beams.channels() });
    }
    if mic_spec.bins() != beams.bins() || mic_spec.frames() != beams.frames() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", mic_spec.bins(), mic_spec.frames()),
            found: format!("{}x{}", beams.bins(), beams.frames()),
        });
    }
    let k_c = k_c.min(mic_spec.bins());
    let mut data = Array3::zeros(mic_spec.data().raw_dim());
    data.slice_mut(s![.., ..k_c, ..])
        .assign(&mic_spec.data().slice(s![.., ..k_c, ..]));
    data.slice_mut(s![.., k_c.., ..])
        .assign(&beams.data().slice(s![.., k_c.., ..]));
    Ok(HybridInput {
        data,
        cutoff_bin: k_c,
        config: mic_spec.config(),
        sample_rate: mic_spec.sample_rate(),
    })
}

/// Pick the reference channel for a variant: the frontal microphone or the
/// bank's front beam.
pub fn select_reference(
    config: &ModelConfig,
    mic_spec: &Spectrogram,
    beam_spec: &BeamSpectrogram,
    array: &MicArray,
) -> Result<Spectrogram> {
    match config.variant.reference_kind() {
        ReferenceKind::FrontalMic => Ok(mic_spec.extract_channel(array.frontal_mic_index())),
        ReferenceKind::ForwardBeam => beam_spec.beam("front"),
    }
}

/// Assemble the model input tensor for a variant.
pub fn build_model_input(
    config: &ModelConfig,
    mic_spec: &Spectrogram,
    beam_spec: &BeamSpectrogram,
) -> Result<HybridInput> {
    let bins = mic_spec.bins();
    match config.variant.input_kind() {
        // Degenerate cutoffs reuse the bandwise path: all-mic or all-beam.
        InputKind::Mics => assemble_bandwise(mic_spec, beam_spec, bins),
        InputKind::Beams => assemble_bandwise(mic_spec, beam_spec, 0),
        InputKind::Bandwise => {
            let k_c = cutoff_bin(config.cutoff_hz, &mic_spec.config(), mic_spec.sample_rate())?;
            assemble_bandwise(mic_spec, beam_spec, k_c)
        }
    }
}
