//! Truncated-Schroeder accuracy across T60 for room-shape families.

use hybeam::harness::seeded_rng;
use hybeam::room::{simulate_rir, ImageDepth, Room};
use rand::Rng;

fn truncated_schroeder(taps: &[f64], fs: u32, trunc_db: f64, fit_lo: f64, fit_hi: f64) -> f64 {
    let bin = (0.005 * fs as f64) as usize;
    let mut prof: Vec<f64> = taps.chunks(bin).map(|c| c.iter().map(|x| x * x).sum()).collect();
    let peak = prof.iter().cloned().fold(0.0f64, f64::max);
    for p in prof.iter_mut() {
        *p = 10.0 * (*p / peak).log10();
    }
    let peak_idx = prof.iter().position(|&p| p == 0.0).unwrap_or(0);
    let trunc_bin = prof[peak_idx..]
        .iter()
        .position(|&p| p <= trunc_db)
        .map(|i| peak_idx + i)
        .unwrap_or(prof.len());
    let cut = (trunc_bin * bin).min(taps.len());
    let mut edc: Vec<f64> = Vec::with_capacity(cut);
    let mut acc = 0.0;
    for &t in taps[..cut].iter().rev() {
        acc += t * t;
        edc.push(acc);
    }
    edc.reverse();
    let total = edc[0];
    let db: Vec<f64> = edc.iter().map(|&e| 10.0 * (e / total).log10()).collect();
    let lo = db.iter().position(|&d| d <= fit_lo).unwrap();
    let hi = db.iter().position(|&d| d <= fit_hi).unwrap_or(db.len() - 1);
    let n = (hi - lo) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &d) in db[lo..hi].iter().enumerate() {
        let x = i as f64;
        sx += x; sy += d; sxx += x * x; sxy += x * d;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    -60.0 / slope / fs as f64
}

fn main() {
    let mut rng = seeded_rng(9, "shape", 0);
    // Compact family: aspect ratios near 1.3:1.2:1.
    for i in 0..10 {
        let t60 = 0.2 + 0.3 * (i as f64 / 9.0);
        let h: f64 = rng.random_range(2.6..3.5);
        let room = Room {
            length_m: (h * rng.random_range(1.25..1.45)).clamp(2.5, 5.0),
            width_m: (h * rng.random_range(1.1..1.3)).clamp(3.0, 9.0),
            height_m: h,
            t60_s: t60,
        };
        let src = [room.length_m / 2.0 - 0.3, room.width_m / 2.0 + 0.4, 1.4];
        let mic = [room.length_m / 2.0 + 0.5, room.width_m / 2.0 - 0.6, 1.6];
        let rir = simulate_rir(&room, src, mic, ImageDepth::SpanT60, 16_000).unwrap();
        let m30 = truncated_schroeder(&rir.taps, 16_000, -30.0, -5.0, -20.0);
        let m35 = truncated_schroeder(&rir.taps, 16_000, -35.0, -5.0, -25.0);
        println!(
            "t60={t60:.2} dims=({:.1},{:.1},{:.1})  tr30: {m30:.3} ({:+.0}%)  tr35: {m35:.3} ({:+.0}%)",
            room.length_m, room.width_m, room.height_m,
            (m30 / t60 - 1.0) * 100.0, (m35 / t60 - 1.0) * 100.0
        );
    }
}
