//! Beamforming oracles: naive-loop equivalence, white-noise gain, and
//! directivity behavior.

mod common;

use hybeam::beamforming::{
    apply_beamformer, build_bank, das_weights, directivity, main_lobe_width, steering_vector,
};
use hybeam::geometry::nominal_array0;
use hybeam::harness::seeded_rng;
use hybeam::room::SPEED_OF_SOUND;
use hybeam::stft::{Spectrogram, StftConfig};
use num_complex::Complex64;
use rand::Rng;

fn random_spec(channels: usize, frames: usize, seed: u64) -> Spectrogram {
    let mut spec = Spectrogram::zeros(channels, frames, StftConfig::default(), 16_000);
    let mut rng = seeded_rng(seed, "bf-oracle", 0);
    for v in spec.data_mut().iter_mut() {
        *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    spec
}

#[test]
fn apply_beamformer_matches_naive_per_bin_loop() {
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let spec = random_spec(4, 9, 3);
    for (_, dir) in hybeam::beamforming::BANK_DIRECTIONS {
        let w = das_weights(&array, dir, &cfg, 16_000, SPEED_OF_SOUND).unwrap();
        let got = apply_beamformer(&w, &spec).unwrap();
        for k in 0..spec.bins() {
            for i in 0..spec.frames() {
                let mut want = Complex64::ZERO;
                for l in 0..4 {
                    want += w[[k, l]].conj() * spec.data()[[l, k, i]];
                }
                let err = (got.data()[[0, k, i]] - want).norm();
                let scale = want.norm().max(1e-30);
                assert!(err / scale < 1e-12, "k={k} i={i}");
            }
        }
    }
}

#[test]
fn apply_beamformer_is_linear_in_the_input() {
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let a = random_spec(4, 6, 4);
    let b = random_spec(4, 6, 5);
    let mut combined = Spectrogram::zeros(4, 6, cfg, 16_000);
    for (c, (x, y)) in combined
        .data_mut()
        .iter_mut()
        .zip(a.data().iter().zip(b.data().iter()))
    {
        *c = 2.0 * x - 0.5 * y;
    }
    let w = das_weights(&array, [0.0, 1.0, 0.0], &cfg, 16_000, SPEED_OF_SOUND).unwrap();
    let fa = apply_beamformer(&w, &a).unwrap();
    let fb = apply_beamformer(&w, &b).unwrap();
    let fc = apply_beamformer(&w, &combined).unwrap();
    for ((c, x), y) in fc.data().iter().zip(fa.data().iter()).zip(fb.data().iter()) {
        assert!((c - (2.0 * x - 0.5 * y)).norm() < 1e-12);
    }
}

#[test]
fn white_noise_gain_is_10_log10_l() {
    // Plane wave from the steering direction plus spatially white noise of
    // equal per-channel power; the output SNR gain over a single channel
    // must be 10 log10(4) = 6.02 dB.
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let dir = [1.0, 0.0, 0.0];
    let w = das_weights(&array, dir, &cfg, 16_000, SPEED_OF_SOUND).unwrap();
    let mut rng = seeded_rng(6, "wng", 0);
    let frames = 400;
    let mut sig_out = 0.0;
    let mut noise_out = 0.0;
    let mut sig_in = 0.0;
    let mut noise_in = 0.0;
    for k in (8..cfg.bins()).step_by(16) {
        let a = steering_vector(&array, dir, k as f64 * 31.25, SPEED_OF_SOUND);
        for _ in 0..frames {
            let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let mut out_s = Complex64::ZERO;
            let mut out_n = Complex64::ZERO;
            for l in 0..4 {
                let n = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                out_s += w[[k, l]].conj() * (a[l] * s);
                out_n += w[[k, l]].conj() * n;
                if l == 0 {
                    sig_in += (a[l] * s).norm_sqr();
                    noise_in += n.norm_sqr();
                }
            }
            sig_out += out_s.norm_sqr();
            noise_out += out_n.norm_sqr();
        }
    }
    let gain_db =
        10.0 * ((sig_out / noise_out) / (sig_in / noise_in)).log10();
    assert!((gain_db - 6.02).abs() <= 0.5, "array gain {gain_db} dB");
}

#[test]
fn bank_front_beam_amplifies_frontal_plane_wave_against_white_noise() {
    // Same property exercised end to end through the bank application path.
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let bank = build_bank(&array, &cfg, 16_000);
    let mut rng = seeded_rng(8, "wng2", 0);
    let frames = 200;
    let mut signal = Spectrogram::zeros(4, frames, cfg, 16_000);
    let mut noise = Spectrogram::zeros(4, frames, cfg, 16_000);
    for k in 0..cfg.bins() {
        let a = steering_vector(&array, [1.0, 0.0, 0.0], k as f64 * 31.25, SPEED_OF_SOUND);
        for i in 0..frames {
            let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for l in 0..4 {
                signal.data_mut()[[l, k, i]] = a[l] * s;
                noise.data_mut()[[l, k, i]] =
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
    }
    let out_s = bank.apply(&signal).unwrap().beam("front").unwrap();
    let out_n = bank.apply(&noise).unwrap().beam("front").unwrap();
    let p = |s: &Spectrogram| s.data().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let in_snr = p(&signal.extract_channel(0)) / p(&noise.extract_channel(0));
    let out_snr = p(&out_s) / p(&out_n);
    let gain_db = 10.0 * (out_snr / in_snr).log10();
    assert!((gain_db - 6.02).abs() <= 0.5, "array gain {gain_db} dB");
}

#[test]
fn front_lobe_is_narrower_at_4_khz_than_at_250_hz() {
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let w = das_weights(&array, [1.0, 0.0, 0.0], &cfg, 16_000, SPEED_OF_SOUND).unwrap();
    let wide = main_lobe_width(&w, &array, 250.0, 0.0, 16_000).unwrap();
    let narrow = main_lobe_width(&w, &array, 4000.0, 0.0, 16_000).unwrap();
    assert!(
        narrow < wide,
        "-3 dB width at 4 kHz ({narrow:.3} rad) must be below 250 Hz ({wide:.3} rad)"
    );
    // At 250 Hz the 17 cm aperture is almost omnidirectional.
    assert!(wide > 2.0, "250 Hz lobe unexpectedly narrow: {wide}");
}

#[test]
fn directivity_is_unity_on_axis_for_every_bank_direction() {
    let array = nominal_array0();
    let cfg = StftConfig::default();
    let bank = build_bank(&array, &cfg, 16_000);
    let steer_az = [0.0, std::f64::consts::PI, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2];
    for (d, az) in steer_az.iter().enumerate() {
        let w = bank.direction_weights(d);
        for freq in [500.0, 2000.0, 6000.0] {
            let g = directivity(&w, &array, freq, &[*az], 16_000).unwrap();
            assert!((g[0] - 1.0).abs() < 1e-12, "beam {d} at {freq} Hz: {}", g[0]);
        }
    }
}
