//! Compare the simulated EDC against a direction-mixture theory curve:
//! E(t) ~ <exp(ln(1-a) * c * t * sum(|u_i|/L_i))> over the sphere.

use hybeam::harness::seeded_rng;
use hybeam::room::{sabine_absorption, simulate_rir, ImageDepth, Room};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

fn main() {
    let room = Room { length_m: 4.6, width_m: 4.3, height_m: 3.3, t60_s: 0.5 };
    let alpha = sabine_absorption(&room).unwrap();
    println!("alpha = {alpha:.4}");
    let rir = simulate_rir(&room, [2.0, 2.4, 1.4], [2.8, 1.8, 1.6], ImageDepth::SpanT60, 16_000)
        .unwrap();

    // Simulated EDC.
    let mut edc: Vec<f64> = Vec::with_capacity(rir.taps.len());
    let mut acc = 0.0;
    for &t in rir.taps.iter().rev() {
        acc += t * t;
        edc.push(acc);
    }
    edc.reverse();
    let total = edc[0];

    // Theory: Monte-Carlo direction mixture, EDC = integral of E.
    let mut rng = seeded_rng(2, "mc", 0);
    let dirs: Vec<f64> = (0..20000)
        .map(|_| {
            let u: [f64; 3] = UnitSphere.sample(&mut rng);
            u[0].abs() / room.length_m + u[1].abs() / room.width_m + u[2].abs() / room.height_m
        })
        .collect();
    let ln_b2 = (1.0f64 - alpha).ln();
    let energy = |t: f64| -> f64 {
        dirs.iter().map(|r| (ln_b2 * 343.0 * t * r).exp()).sum::<f64>() / dirs.len() as f64
    };
    // EDC_theory(t) = int_t^inf E ~ sum over fine grid.
    let dt = 0.002;
    let grid: Vec<f64> = (0..600).map(|i| i as f64 * dt).collect();
    let e: Vec<f64> = grid.iter().map(|&t| energy(t)).collect();
    let mut edc_th: Vec<f64> = vec![0.0; grid.len()];
    let mut a2 = 0.0;
    for i in (0..grid.len()).rev() {
        a2 += e[i] * dt;
        edc_th[i] = a2;
    }
    let tot_th = edc_th[0];

    println!("   t      sim EDC    theory EDC   ideal");
    for ms in (20..=400).step_by(40) {
        let t = ms as f64 / 1000.0;
        let idx = (t * 16_000.0) as usize;
        let sim = if idx < edc.len() { 10.0 * (edc[idx] / total).log10() } else { f64::NAN };
        let th = 10.0 * (edc_th[ms / 2] / tot_th).log10();
        let ideal = -60.0 * t / room.t60_s;
        println!("{t:.3}s  {sim:8.2}  {th:8.2}  {ideal:8.2}");
    }
}
