//! Frequency-dependent delay-and-sum beamforming.
//!
//! Far-field plane-wave steering: for a unit direction `d` and mic offsets
//! `p` (meters), the per-mic delay is `tau = -(d . p) / c` and the weights
//! `w(k) = exp(-j 2 pi f_k tau) / L`, so `w^H a = 1` toward the steering
//! direction at every bin.

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::MicArray;
use crate::room::SPEED_OF_SOUND;
use crate::stft::{Spectrogram, StftConfig};

/// The four bank steering directions in the array frame.
pub const BANK_DIRECTIONS: [(&str, [f64; 3]); 4] = [
    ("front", [1.0, 0.0, 0.0]),
    ("back", [-1.0, 0.0, 0.0]),
    ("left", [0.0, 1.0, 0.0]),
    ("right", [0.0, -1.0, 0.0]),
];

/// Far-field steering vector `a_l(k) = exp(-j 2 pi f tau_l)` for one
/// frequency, with `tau_l = -(d . p_l) / c`.
pub fn steering_vector(array: &MicArray, direction: [f64; 3], freq_hz: f64, c: f64) -> Vec<Complex64> {
    array
        .mics_mm
        .iter()
        .map(|p| {
            let tau = -(direction[0] * p[0] + direction[1] * p[1] + direction[2] * p[2]) / 1000.0 / c;
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq_hz * tau)
        })
        .collect()
}

/// Delay-and-sum weights for one direction: `[bins][mics]` complex matrix
/// with `w_l(k) = exp(-j 2 pi f_k tau_l) / L`.
pub fn das_weights(
    array: &MicArray,
    direction: [f64; 3],
    config: &StftConfig,
    sample_rate: u32,
    c: f64,
) -> Result<Array2<Complex64>> {
    let norm = (direction[0] * direction[0] + direction[1] * direction[1]
        + direction[2] * direction[2])
        .sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitDirection { norm });
    }
    let mic_count = array.mic_count();
    let bins = config.bins();
    let bin_width = config.bin_width(sample_rate);
    let scale = 1.0 / mic_count as f64;
    let mut weights = Array2::zeros((bins, mic_count));
    for k in 0..bins {
        let f = k as f64 * bin_width;
        let a = steering_vector(array, direction, f, c);
        for (l, al) in a.iter().enumerate() {
            weights[[k, l]] = scale * al;
        }
    }
    Ok(weights)
}

/// Per-bin, per-frame inner product `w^H X` producing one output channel.
pub fn apply_beamformer(weights: &Array2<Complex64>, spec: &Spectrogram) -> Result<Spectrogram> {
    let mic_count = weights.shape()[1];
    if spec.channels() != mic_count {
        return Err(Error::ChannelMismatch { left: mic_count, right: spec.channels() });
    }
    if weights.shape()[0] != spec.bins() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} bins", weights.shape()[0]),
            found: format!("{} bins", spec.bins()),
        });
    }
    let mut out = Spectrogram::zeros(1, spec.frames(), spec.config(), spec.sample_rate());
    for k in 0..spec.bins() {
        for i in 0..spec.frames() {
            let mut acc = Complex64::ZERO;
            for l in 0..mic_count {
                acc += weights[[k, l]].conj() * spec.data()[[l, k, i]];
            }
            out.data_mut()[[0, k, i]] = acc;
        }
    }
    Ok(out)
}

/// Beamformer outputs for the bank's directions, `[D][bins][frames]`.
#[derive(Debug, Clone)]
pub struct BeamSpectrogram {
    pub spec: Spectrogram,
    pub labels: Vec<String>,
}

impl BeamSpectrogram {
    /// Extract one beam as a single-channel spectrogram.
    pub fn beam(&self, label: &str) -> Result<Spectrogram> {
        let idx = self
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidConfig(format!("no beam labeled '{label}'")))?;
        Ok(self.spec.extract_channel(idx))
    }
}

/// Delay-and-sum weights for the four bank directions, tied to one array
/// geometry and STFT configuration.
#[derive(Debug, Clone)]
pub struct BeamformerBank {
    pub array_name: String,
    pub labels: Vec<String>,
    pub directions: Vec<[f64; 3]>,
    /// Complex weights `[D][bins][mics]`.
    pub weights: Array3<Complex64>,
    pub config: StftConfig,
    pub sample_rate: u32,
}

/// Build the front/back/left/right bank from the array's mic positions.
pub fn build_bank(array: &MicArray, config: &StftConfig, sample_rate: u32) -> BeamformerBank {
    let mic_count = array.mic_count();
    let bins = config.bins();
    let mut weights = Array3::zeros((BANK_DIRECTIONS.len(), bins, mic_count));
    let mut labels = Vec::new();
    let mut directions = Vec::new();
    for (d, (label, dir)) in BANK_DIRECTIONS.iter().enumerate() {
        let w = das_weights(array, *dir, config, sample_rate, SPEED_OF_SOUND)
            .expect("bank directions are unit vectors");
        weights.slice_mut(ndarray::s![d, .., ..]).assign(&w);
        labels.push((*label).to_string());
        directions.push(*dir);
    }
    BeamformerBank {
        array_name: array.name.clone(),
        labels,
        directions,
        weights,
        config: *config,
        sample_rate,
    }
}

impl BeamformerBank {
    pub fn beam_count(&self) -> usize {
        self.labels.len()
    }

    pub fn direction_weights(&self, d: usize) -> Array2<Complex64> {
        self.weights.slice(ndarray::s![d, .., ..]).to_owned()
    }

    /// Apply every beam of the bank to a multichannel spectrogram.
    pub fn apply(&self, spec: &Spectrogram) -> Result<BeamSpectrogram> {
        let mut out = Spectrogram::zeros(
            self.beam_count(),
            spec.frames(),
            spec.config(),
            spec.sample_rate(),
        );
        for d in 0..self.beam_count() {
            let one = apply_beamformer(&self.direction_weights(d), spec)?;
            out.data_mut()
                .slice_mut(ndarray::s![d..d + 1, .., ..])
                .assign(one.data());
        }
        Ok(BeamSpectrogram { spec: out, labels: self.labels.clone() })
    }

    /// Human-readable dump of directions and per-bin weights.
    pub fn dump_text(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "array = {}", self.array_name)?;
        writeln!(w, "fft_size = {}", self.config.fft_size)?;
        for (d, label) in self.labels.iter().enumerate() {
            writeln!(w, "\n[beam.{label}] direction = {:?}", self.directions[d])?;
            for k in 0..self.config.bins() {
                let row: Vec<String> = (0..self.weights.shape()[2])
                    .map(|l| {
                        let c = self.weights[[d, k, l]];
                        format!("{:+.6}{:+.6}j", c.re, c.im)
                    })
                    .collect();
                writeln!(w, "k={k:3} {}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Magnitude response `|w^H a(theta)|` over an azimuth grid (radians) at one
/// frequency, for horizontal plane-wave arrivals.
pub fn directivity(
    weights: &Array2<Complex64>,
    array: &MicArray,
    freq_hz: f64,
    azimuths_rad: &[f64],
    sample_rate: u32,
) -> Result<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    if freq_hz > nyquist {
        return Err(Error::InvalidConfig(format!(
            "directivity frequency {freq_hz} Hz above Nyquist {nyquist} Hz"
        )));
    }
    let bin_width = sample_rate as f64 / ((weights.shape()[0] - 1) as f64 * 2.0);
    let k = (freq_hz / bin_width).round() as usize;
    let k = k.min(weights.shape()[0] - 1);
    Ok(azimuths_rad
        .iter()
        .map(|&az| {
            let dir = [az.cos(), az.sin(), 0.0];
            let a = steering_vector(array, dir, k as f64 * bin_width, SPEED_OF_SOUND);
            let mut acc = Complex64::ZERO;
            for (l, al) in a.iter().enumerate() {
                acc += weights[[k, l]].conj() * al;
            }
            acc.norm()
        })
        .collect())
}

/// Width (radians) of the region around the steering azimuth where the gain
/// stays above -3 dB of its on-axis value. A beam that never drops below
/// -3 dB has width `2 pi`.
pub fn main_lobe_width(
    weights: &Array2<Complex64>,
    array: &MicArray,
    freq_hz: f64,
    steer_azimuth_rad: f64,
    sample_rate: u32,
) -> Result<f64> {
    let step = 0.25f64.to_radians();
    let n = (std::f64::consts::TAU / step) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| steer_azimuth_rad + i as f64 * step).collect();
    let gains = directivity(weights, array, freq_hz, &grid, sample_rate)?;
    let on_axis = gains[0];
    let thresh = on_axis / std::f64::consts::SQRT_2;
    let right = gains.iter().position(|&g| g < thresh);
    let grid: Vec<f64> = (0..=n).map(|i| steer_azimuth_rad - i as f64 * step).collect();
    let gains = directivity(weights, array, freq_hz, &grid, sample_rate)?;
    let left = gains.iter().position(|&g| g < thresh);
    Ok(match (right, left) {
        (Some(r), Some(l)) => (r + l) as f64 * step,
        _ => std::f64::consts::TAU,
    })
}
