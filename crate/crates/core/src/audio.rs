//! Time-domain sample buffers and basic signal utilities.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// The pipeline operates at a fixed 16 kHz sample rate.
pub const SAMPLE_RATE: u32 = 16_000;

/// Single- or multi-channel time-domain samples at a fixed sample rate.
///
/// All channels have equal length; samples are stored per channel as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidBuffer("no channels".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidBuffer("sample_rate must be > 0".into()));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidBuffer("channels differ in length".into()));
        }
        Ok(Self { channels, sample_rate })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self { channels: vec![samples], sample_rate }
    }

    pub fn zeros(channel_count: usize, len: usize, sample_rate: u32) -> Self {
        Self {
            channels: vec![vec![0.0; len]; channel_count],
            sample_rate,
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.channels[idx]
    }

    pub fn channel_mut(&mut self, idx: usize) -> &mut Vec<f64> {
        &mut self.channels[idx]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// New buffer containing a single channel of this one.
    pub fn extract_channel(&self, idx: usize) -> AudioBuffer {
        AudioBuffer::mono(self.channels[idx].clone(), self.sample_rate)
    }

    /// Total energy summed over channels and samples.
    pub fn energy(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    /// Mean per-sample power averaged over channels.
    pub fn mean_power(&self) -> f64 {
        let n = self.channel_count() * self.len();
        if n == 0 {
            0.0
        } else {
            self.energy() / n as f64
        }
    }

    /// Copy trimmed or zero-padded to exactly `len` samples per channel.
    pub fn with_len(&self, len: usize) -> AudioBuffer {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let mut out = vec![0.0; len];
                let n = c.len().min(len);
                out[..n].copy_from_slice(&c[..n]);
                out
            })
            .collect();
        AudioBuffer { channels, sample_rate: self.sample_rate }
    }

    /// Elementwise sum of two equally shaped buffers.
    pub fn add(&self, other: &AudioBuffer) -> Result<AudioBuffer> {
        if self.channel_count() != other.channel_count() || self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.channel_count(), self.len()),
                found: format!("{}x{}", other.channel_count(), other.len()),
            });
        }
        let channels = self
            .channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(AudioBuffer { channels, sample_rate: self.sample_rate })
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &AudioBuffer) -> Result<AudioBuffer> {
        let neg = AudioBuffer {
            channels: other
                .channels
                .iter()
                .map(|c| c.iter().map(|x| -x).collect())
                .collect(),
            sample_rate: other.sample_rate,
        };
        self.add(&neg)
    }
}

/// Linear convolution via FFT; output length is `a.len() + b.len() - 1`.
pub fn fft_convolve(a: &[f64], b: &[f64], out_len: Option<usize>) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0; out_len.unwrap_or(0)];
    }
    let full = a.len() + b.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fa.resize(n, Complex64::ZERO);
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fb.resize(n, Complex64::ZERO);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    let take = out_len.unwrap_or(full);
    (0..take)
        .map(|i| if i < n { fa[i].re * scale } else { 0.0 })
        .collect()
}
