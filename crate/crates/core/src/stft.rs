//! STFT analysis/synthesis and band projection.
//!
//! Analysis uses a periodic Hann window at 50% overlap; synthesis applies the
//! same window and divides by the accumulated squared-window sum per sample,
//! which reconstructs the input exactly wherever that sum is large enough.
//! The normalizer is clamped below [`WSUM_FLOOR`] so that spectrally modified
//! frames cannot blow up where the window tapers to zero; only the outer
//! quarter-window edge samples are affected.

use ndarray::{s, Array3};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// STFT framing parameters. The window is always a periodic Hann.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { fft_size: 512, hop: 256 }
    }
}

impl StftConfig {
    /// 50% overlap is required so the Hann overlap-add stays exact.
    pub fn new(fft_size: usize) -> Result<Self> {
        if fft_size == 0 || fft_size % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "fft_size must be a positive even number, got {fft_size}"
            )));
        }
        Ok(Self { fft_size, hop: fft_size / 2 })
    }

    /// One-sided bin count, `fft_size / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Width of one frequency bin in Hz (31.25 Hz at the defaults).
    pub fn bin_width(&self, sample_rate: u32) -> f64 {
        sample_rate as f64 / self.fft_size as f64
    }

    fn hann(&self) -> Vec<f64> {
        let n = self.fft_size as f64;
        (0..self.fft_size)
            .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n).cos()))
            .collect()
    }
}

/// Lower clamp on the overlap-add window-power normalizer. Bounds the gain
/// applied to edge samples of modified spectrograms by `1/sqrt(WSUM_FLOOR)`.
pub const WSUM_FLOOR: f64 = 0.1;

/// One-sided complex STFT tensor, `channels x bins x frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Array3<Complex64>,
    config: StftConfig,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn from_data(data: Array3<Complex64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        if data.shape()[1] != config.bins() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} bins", config.bins()),
                found: format!("{} bins", data.shape()[1]),
            });
        }
        Ok(Self { data, config, sample_rate })
    }

    pub fn zeros(channels: usize, frames: usize, config: StftConfig, sample_rate: u32) -> Self {
        Self {
            data: Array3::zeros((channels, config.bins(), frames)),
            config,
            sample_rate,
        }
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.data
    }

    pub fn config(&self) -> StftConfig {
        self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn bins(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn bin_width(&self) -> f64 {
        self.config.bin_width(self.sample_rate)
    }

    /// New single-channel spectrogram holding channel `idx`.
    pub fn extract_channel(&self, idx: usize) -> Spectrogram {
        let ch = self.data.slice(s![idx..idx + 1, .., ..]).to_owned();
        Spectrogram { data: ch, config: self.config, sample_rate: self.sample_rate }
    }
}

/// Forward STFT. Frame `f` covers samples `[f*hop, f*hop + fft_size)`; the
/// trailing partial frame is zero-padded.
pub fn stft(buffer: &AudioBuffer, config: &StftConfig) -> Result<Spectrogram> {
    if buffer.len() < config.fft_size {
        return Err(Error::InputTooShort { got: buffer.len(), need: config.fft_size });
    }
    let n = config.fft_size;
    let hop = config.hop;
    let frames = (buffer.len() - n).div_ceil(hop) + 1;
    let bins = config.bins();
    let window = config.hann();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut data = Array3::zeros((buffer.channel_count(), bins, frames));
    let mut frame = vec![Complex64::ZERO; n];

    for (ch, samples) in buffer.channels().iter().enumerate() {
        for f in 0..frames {
            let start = f * hop;
            for (i, slot) in frame.iter_mut().enumerate() {
                let x = samples.get(start + i).copied().unwrap_or(0.0);
                *slot = Complex64::new(x * window[i], 0.0);
            }
            fft.process(&mut frame);
            for k in 0..bins {
                data[[ch, k, f]] = frame[k];
            }
        }
    }
    Ok(Spectrogram { data, config: *config, sample_rate: buffer.sample_rate() })
}

/// Inverse STFT by windowed overlap-add. Output length is
/// `(frames - 1) * hop + fft_size` per channel.
pub fn istft(spec: &Spectrogram) -> AudioBuffer {
    let n = spec.config.fft_size;
    let hop = spec.config.hop;
    let frames = spec.frames();
    let bins = spec.bins();
    let out_len = if frames == 0 { 0 } else { (frames - 1) * hop + n };
    let window = spec.config.hann();

    // Accumulated squared-window sum per output sample.
    let mut wsum = vec![0.0; out_len];
    for f in 0..frames {
        for (i, w) in window.iter().enumerate() {
            wsum[f * hop + i] += w * w;
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let mut channels = Vec::with_capacity(spec.channels());
    let mut frame = vec![Complex64::ZERO; n];

    for ch in 0..spec.channels() {
        let mut acc = vec![0.0; out_len];
        for f in 0..frames {
            // Rebuild the full spectrum by Hermitian symmetry.
            for k in 0..bins {
                frame[k] = spec.data[[ch, k, f]];
            }
            for k in bins..n {
                frame[k] = spec.data[[ch, n - k, f]].conj();
            }
            ifft.process(&mut frame);
            let scale = 1.0 / n as f64;
            for (i, w) in window.iter().enumerate() {
                acc[f * hop + i] += w * frame[i].re * scale;
            }
        }
        for (a, &w2) in acc.iter_mut().zip(&wsum) {
            *a /= w2.max(WSUM_FLOOR);
        }
        channels.push(acc);
    }
    AudioBuffer::new(channels, spec.sample_rate).expect("istft output shape is consistent")
}

/// Map a `[f_lo, f_hi)` band in Hz to the half-open STFT bin range
/// `[k_lo, k_hi)`: lower edge inclusive, upper edge exclusive on bin center
/// frequency, `k = ceil(f / bin_width)` at both edges.
pub fn band_to_bins(
    f_lo: f64,
    f_hi: f64,
    config: &StftConfig,
    sample_rate: u32,
) -> Result<(usize, usize)> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(0.0..nyquist).contains(&f_lo) || f_hi <= f_lo || f_hi > nyquist {
        return Err(Error::DegenerateBand { lo: f_lo, hi: f_hi });
    }
    let bw = config.bin_width(sample_rate);
    let k_lo = (f_lo / bw).ceil() as usize;
    let k_hi = ((f_hi / bw).ceil() as usize).min(config.bins());
    if k_hi <= k_lo {
        return Err(Error::DegenerateBand { lo: f_lo, hi: f_hi });
    }
    Ok((k_lo, k_hi))
}

/// Keep only the STFT bins whose centers fall in `[f_lo, f_hi)` and transform
/// back to the time domain. Output is trimmed to the input length; the bin
/// range actually used is returned alongside.
pub fn band_project(
    buffer: &AudioBuffer,
    f_lo: f64,
    f_hi: f64,
    config: &StftConfig,
) -> Result<(AudioBuffer, (usize, usize))> {
    let (k_lo, k_hi) = band_to_bins(f_lo, f_hi, config, buffer.sample_rate())?;
    let mut spec = stft(buffer, config)?;
    spec.data.slice_mut(s![.., ..k_lo, ..]).fill(Complex64::ZERO);
    spec.data.slice_mut(s![.., k_hi.., ..]).fill(Complex64::ZERO);
    let out = istft(&spec).with_len(buffer.len());
    Ok((out, (k_lo, k_hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, len: usize, sample_rate: u32) -> AudioBuffer {
        let samples = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / sample_rate as f64).sin())
            .collect();
        AudioBuffer::mono(samples, sample_rate)
    }

    #[test]
    fn defaults_give_31_25_hz_bins() {
        let cfg = StftConfig::default();
        assert_eq!(cfg.bins(), 257);
        assert_eq!(cfg.bin_width(16_000), 31.25);
    }

    #[test]
    fn zero_buffer_gives_zero_spectrogram() {
        let buf = AudioBuffer::zeros(2, 4096, 16_000);
        let spec = stft(&buf, &StftConfig::default()).unwrap();
        assert!(spec.data().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn too_short_input_errors() {
        let buf = AudioBuffer::mono(vec![0.0; 100], 16_000);
        let err = stft(&buf, &StftConfig::default()).unwrap_err();
        assert!(err.to_string().contains("input too short"));
    }

    #[test]
    fn bin_centered_tone_concentrates_at_bin_31() {
        // 31 * 31.25 Hz = 968.75 Hz. The Hann window spreads a bin-centered
        // tone over exactly bins k-1..k+1, so concentration is measured over
        // the main lobe with bin 31 as the peak.
        let cfg = StftConfig::default();
        let buf = tone(968.75, 256 * 12 + 512, 16_000);
        let spec = stft(&buf, &cfg).unwrap();
        for f in 2..spec.frames() - 2 {
            let total: f64 = (0..spec.bins()).map(|k| spec.data()[[0, k, f]].norm_sqr()).sum();
            let lobe: f64 = (30..=32).map(|k| spec.data()[[0, k, f]].norm_sqr()).sum();
            assert!(lobe / total >= 0.99, "frame {f}: {}", lobe / total);
            let peak = (0..spec.bins())
                .max_by(|&a, &b| {
                    spec.data()[[0, a, f]]
                        .norm_sqr()
                        .total_cmp(&spec.data()[[0, b, f]].norm_sqr())
                })
                .unwrap();
            assert_eq!(peak, 31, "frame {f}");
        }
    }

    #[test]
    fn zero_spectrogram_inverts_to_zero_buffer() {
        let spec = Spectrogram::zeros(1, 8, StftConfig::default(), 16_000);
        let buf = istft(&spec);
        assert_eq!(buf.len(), 7 * 256 + 512);
        assert!(buf.channel(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_dc_frame_reconstructs_scaled_window() {
        let cfg = StftConfig::default();
        let mut spec = Spectrogram::zeros(1, 5, cfg, 16_000);
        let amp = 512.0; // bin value c; IFFT frame is the constant c / N = 1.0
        spec.data_mut()[[0, 0, 2]] = Complex64::new(amp, 0.0);
        let out = istft(&spec);
        // Analytic overlap-add: w[m] * 1.0 / wsum over the frame support.
        let window = cfg.hann();
        let mut wsum = vec![0.0; out.len()];
        for f in 0..5 {
            for (i, w) in window.iter().enumerate() {
                wsum[f * 256 + i] += w * w;
            }
        }
        for i in 0..512 {
            let n = 2 * 256 + i;
            let expected = window[i] / wsum[n].max(WSUM_FLOOR);
            assert!((out.channel(0)[n] - expected).abs() < 1e-12, "sample {n}");
        }
        // Outside the frame support the signal is zero.
        assert!(out.channel(0)[..2 * 256].iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn band_mapping_tiles_the_paper_bands() {
        let cfg = StftConfig::default();
        let edges = [0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];
        let expect = [(0, 16), (16, 32), (32, 64), (64, 128), (128, 256)];
        for (w, e) in edges.windows(2).zip(expect) {
            assert_eq!(band_to_bins(w[0], w[1], &cfg, 16_000).unwrap(), e);
        }
    }

    #[test]
    fn degenerate_band_errors() {
        let cfg = StftConfig::default();
        let err = band_project(
            &AudioBuffer::zeros(1, 2048, 16_000),
            1000.0,
            1000.0,
            &cfg,
        )
        .unwrap_err();
        assert!(err.to_string().contains("degenerate band"));
        // Narrower than one bin and straddling no bin center.
        assert!(band_to_bins(1001.0, 1010.0, &cfg, 16_000).is_err());
    }

    #[test]
    fn tone_stays_in_its_band() {
        // Bin-centered tone at 750 Hz (bin 24): the Hann main lobe
        // (bins 23..25) lies fully inside [500, 1000).
        let cfg = StftConfig::default();
        let buf = tone(750.0, 16_000, 16_000);
        let (kept, bins) = band_project(&buf, 500.0, 1000.0, &cfg).unwrap();
        assert_eq!(bins, (16, 32));
        let (dropped, _) = band_project(&buf, 1000.0, 2000.0, &cfg).unwrap();
        let (roundtrip, _) = band_project(&buf, 0.0, 8000.0, &cfg).unwrap();
        let e_round = roundtrip.energy();
        assert!(kept.energy() >= 0.99 * e_round);
        assert!(dropped.energy() <= 0.01 * e_round);
    }
}
