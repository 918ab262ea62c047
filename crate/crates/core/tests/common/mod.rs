//! Shared, implementation-independent oracles for the integration tests.

#![allow(dead_code)]

use hybeam::audio::AudioBuffer;
use hybeam::harness::seeded_rng;
use hybeam::room::{reflection_from_t60, Room, SPEED_OF_SOUND};
use rand::Rng;

/// One arrival as computed by the brute-force mirror enumerator.
#[derive(Debug, Clone, Copy)]
pub struct OracleArrival {
    pub delay_samples: f64,
    pub amplitude: f64,
    pub order: u32,
}

/// Brute-force image enumeration by recursive wall mirroring with position
/// deduplication. Structured differently from the lattice construction on
/// purpose: it reflects the source across each of the six walls up to
/// `max_order` times and keeps the lowest-order instance of each image.
pub fn brute_force_arrivals(
    room: &Room,
    source: [f64; 3],
    mic: [f64; 3],
    max_order: usize,
    sample_rate: u32,
) -> Vec<OracleArrival> {
    let beta = reflection_from_t60(room).expect("feasible room");
    let dims = room.dims();
    let mut frontier = vec![source];
    let mut images: Vec<([f64; 3], u32)> = vec![(source, 0)];

    let mirror = |p: [f64; 3], wall: usize| -> [f64; 3] {
        // wall 0/1: x = 0 / x = Lx, wall 2/3: y, wall 4/5: z
        let axis = wall / 2;
        let plane = if wall % 2 == 0 { 0.0 } else { dims[axis] };
        let mut out = p;
        out[axis] = 2.0 * plane - p[axis];
        out
    };
    let close = |a: [f64; 3], b: [f64; 3]| -> bool {
        (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9 && (a[2] - b[2]).abs() < 1e-9
    };

    for order in 1..=max_order as u32 {
        let mut next = Vec::new();
        for p in &frontier {
            for wall in 0..6 {
                let m = mirror(*p, wall);
                if !images.iter().any(|(q, _)| close(*q, m)) {
                    images.push((m, order));
                    next.push(m);
                }
            }
        }
        frontier = next;
    }

    let mut arrivals: Vec<OracleArrival> = images
        .into_iter()
        .map(|(img, order)| {
            let d = ((img[0] - mic[0]).powi(2)
                + (img[1] - mic[1]).powi(2)
                + (img[2] - mic[2]).powi(2))
            .sqrt();
            OracleArrival {
                delay_samples: d / SPEED_OF_SOUND * sample_rate as f64,
                amplitude: beta.powi(order as i32) / (4.0 * std::f64::consts::PI * d),
                order,
            }
        })
        .collect();
    arrivals.sort_by(|a, b| a.delay_samples.total_cmp(&b.delay_samples));
    arrivals
}

/// Reverberation time from Schroeder backward integration with the usual
/// truncation correction: the integration stops where the 5 ms short-time
/// energy profile first drops 35 dB below its peak, then T60 comes from a
/// least-squares fit of the decay curve between -5 and -25 dB.
pub fn schroeder_t60(taps: &[f64], sample_rate: u32) -> f64 {
    let bin = (0.005 * sample_rate as f64) as usize;
    let mut profile: Vec<f64> =
        taps.chunks(bin).map(|c| c.iter().map(|x| x * x).sum()).collect();
    let peak = profile.iter().cloned().fold(0.0f64, f64::max);
    for p in profile.iter_mut() {
        *p = 10.0 * (*p / peak).log10();
    }
    let peak_idx = profile.iter().position(|&p| p == 0.0).unwrap_or(0);
    let trunc = profile[peak_idx..]
        .iter()
        .position(|&p| p <= -35.0)
        .map(|i| (peak_idx + i) * bin)
        .unwrap_or(taps.len())
        .min(taps.len());

    let mut edc: Vec<f64> = Vec::with_capacity(trunc);
    let mut acc = 0.0;
    for &t in taps[..trunc].iter().rev() {
        acc += t * t;
        edc.push(acc);
    }
    edc.reverse();
    let total = edc[0];
    let db: Vec<f64> = edc.iter().map(|&e| 10.0 * (e / total).log10()).collect();
    let lo = db.iter().position(|&d| d <= -5.0).expect("decay reaches -5 dB");
    let hi = db.iter().position(|&d| d <= -25.0).unwrap_or(db.len() - 1);
    // Linear least squares on (sample index, dB).
    let n = (hi - lo) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &d) in db[lo..hi].iter().enumerate() {
        let x = i as f64;
        sx += x;
        sy += d;
        sxx += x * x;
        sxy += x * d;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx); // dB per sample
    -60.0 / slope / sample_rate as f64
}

/// SI-SDR from the cosine-similarity identity `10 log10(rho^2 / (1 - rho^2))`
/// — an algebraically different route from the projection formula.
pub fn si_sdr_by_correlation(estimate: &[f64], reference: &[f64]) -> f64 {
    let dot: f64 = estimate.iter().zip(reference).map(|(a, b)| a * b).sum();
    let ee: f64 = estimate.iter().map(|x| x * x).sum();
    let rr: f64 = reference.iter().map(|x| x * x).sum();
    let rho2 = dot * dot / (ee * rr);
    (10.0 * (rho2 / (1.0 - rho2)).log10()).clamp(-100.0, 100.0)
}

/// Uniform white-noise buffer in [-0.5, 0.5).
pub fn white_noise(len: usize, seed: u64) -> AudioBuffer {
    let mut rng = seeded_rng(seed, "test-noise", 0);
    AudioBuffer::mono((0..len).map(|_| rng.random_range(-0.5..0.5)).collect(), 16_000)
}
