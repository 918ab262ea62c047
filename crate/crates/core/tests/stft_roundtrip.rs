//! Analysis/synthesis oracles: round-trip accuracy, band tiling, and
//! linearity properties.

mod common;

use common::white_noise;
use hybeam::audio::AudioBuffer;
use hybeam::metrics::si_sdr;
use hybeam::stft::{band_project, istft, stft, StftConfig};
use proptest::prelude::*;

fn interior_error_energy(original: &[f64], reconstructed: &[f64], margin: usize) -> f64 {
    let hi = original.len().min(reconstructed.len()) - margin;
    let mut err = 0.0;
    let mut sig = 0.0;
    for i in margin..hi {
        let d = reconstructed[i] - original[i];
        err += d * d;
        sig += original[i] * original[i];
    }
    err / sig
}

#[test]
fn white_noise_roundtrip_interior_error_below_1e10() {
    let cfg = StftConfig::default();
    let buf = white_noise(16_000, 1);
    let rec = istft(&stft(&buf, &cfg).unwrap());
    let rel = interior_error_energy(buf.channel(0), rec.channel(0), 512);
    assert!(rel < 1e-10, "relative error energy {rel}");
}

#[test]
fn roundtrip_interior_si_sdr_above_60_db() {
    let cfg = StftConfig::default();
    for seed in 0..5 {
        let buf = white_noise(12_000, seed);
        let rec = istft(&stft(&buf, &cfg).unwrap());
        let n = buf.len();
        let v = si_sdr(&rec.channel(0)[512..n - 512], &buf.channel(0)[512..n - 512]).unwrap();
        assert!(v > 60.0, "seed {seed}: {v} dB");
    }
}

#[test]
fn paper_bands_tile_the_spectrum_energy() {
    let cfg = StftConfig::default();
    let buf = white_noise(16_000, 7);
    let (roundtrip, _) = band_project(&buf, 0.0, 8000.0, &cfg).unwrap();
    let edges = [0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];
    let mut band_sum = 0.0;
    for w in edges.windows(2) {
        let (b, _) = band_project(&buf, w[0], w[1], &cfg).unwrap();
        band_sum += b.energy();
    }
    let rel = (band_sum - roundtrip.energy()).abs() / roundtrip.energy();
    assert!(rel < 0.01, "band energy mismatch {rel}");
}

#[test]
fn identity_band_equals_full_roundtrip_for_bandlimited_input() {
    // Sum of bin-centered tones below Nyquist: the [0, 8000) band keeps
    // every occupied bin, so projection equals the plain round trip.
    let cfg = StftConfig::default();
    let n = 8192;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / 16_000.0;
            (std::f64::consts::TAU * 750.0 * t).sin()
                + 0.5 * (std::f64::consts::TAU * 2500.0 * t).sin()
                + 0.25 * (std::f64::consts::TAU * 6000.0 * t).cos()
        })
        .collect();
    let buf = AudioBuffer::mono(samples, 16_000);
    let (projected, bins) = band_project(&buf, 0.0, 8000.0, &cfg).unwrap();
    assert_eq!(bins, (0, 256));
    let roundtrip = istft(&stft(&buf, &cfg).unwrap()).with_len(buf.len());
    let num: f64 = projected
        .channel(0)
        .iter()
        .zip(roundtrip.channel(0))
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    assert!(num / roundtrip.energy() < 1e-20);
}

#[test]
fn two_tone_band_separation_leakage_below_minus_40_db() {
    // Bin-centered tones at 750 Hz and 3000 Hz with frame-aligned length.
    let cfg = StftConfig::default();
    let n = 8192;
    let tone = |f: f64| -> Vec<f64> {
        (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 / 16_000.0).sin()).collect()
    };
    let a = tone(750.0);
    let b = tone(3000.0);
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let buf = AudioBuffer::mono(sum, 16_000);

    let (low, _) = band_project(&buf, 500.0, 1000.0, &cfg).unwrap();
    let (high, _) = band_project(&buf, 2000.0, 4000.0, &cfg).unwrap();
    let margin = 512..n - 512;
    let v_low = si_sdr(&low.channel(0)[margin.clone()], &a[margin.clone()]).unwrap();
    let v_high = si_sdr(&high.channel(0)[margin.clone()], &b[margin.clone()]).unwrap();
    assert!(v_low > 40.0, "low-band recovery {v_low} dB");
    assert!(v_high > 40.0, "high-band recovery {v_high} dB");

    // Cross-band leakage: energy of the 750 Hz tone's projection into the
    // other band, relative to its in-band projection.
    let only_a = AudioBuffer::mono(a, 16_000);
    let (in_band, _) = band_project(&only_a, 500.0, 1000.0, &cfg).unwrap();
    let (out_band, _) = band_project(&only_a, 2000.0, 4000.0, &cfg).unwrap();
    let leak = 10.0 * (out_band.energy() / in_band.energy()).log10();
    assert!(leak < -40.0, "cross-band leakage {leak} dB");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stft_is_linear(seed_x in 0u64..1000, seed_y in 1000u64..2000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let cfg = StftConfig::default();
        let x = white_noise(4096, seed_x);
        let y = white_noise(4096, seed_y);
        let combined = AudioBuffer::mono(
            x.channel(0).iter().zip(y.channel(0)).map(|(u, v)| a * u + b * v).collect(),
            16_000,
        );
        let sx = stft(&x, &cfg).unwrap();
        let sy = stft(&y, &cfg).unwrap();
        let sc = stft(&combined, &cfg).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for (c, (u, v)) in sc.data().iter().zip(sx.data().iter().zip(sy.data().iter())) {
            num += (c - (a * u + b * v)).norm_sqr();
            den += c.norm_sqr();
        }
        prop_assert!(den == 0.0 || num / den < 1e-18);
    }

    #[test]
    fn roundtrip_reconstructs_random_buffers(seed in 0u64..500, len in 2048usize..6000) {
        let cfg = StftConfig::default();
        let buf = white_noise(len, seed);
        let rec = istft(&stft(&buf, &cfg).unwrap());
        let rel = interior_error_energy(buf.channel(0), rec.channel(0), 512);
        prop_assert!(rel < 1e-10);
    }
}
