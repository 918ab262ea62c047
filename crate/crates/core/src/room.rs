//! Shoebox room simulation: image-source impulse responses and scene
//! sampling/rendering.
//!
//! Rooms are axis-aligned boxes with a uniform, frequency-independent wall
//! reflection coefficient derived from the target reverberation time. Each
//! image source contributes an attenuated, fractionally delayed impulse
//! rendered with an 81-tap Hann-windowed sinc.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::{fft_convolve, AudioBuffer};
use crate::error::{Error, Result};
use crate::geometry::{rotate_z, world_positions, ArrayPose, MicArray};
use crate::harness::seeded_rng;

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Margin (m) kept between any source and a wall.
const SOURCE_WALL_MARGIN: f64 = 0.05;

/// Half-width of the fractional-delay interpolation kernel; 81 taps total.
const SINC_HALF_WIDTH: i64 = 40;

/// Axis-aligned shoebox room with a target reverberation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub t60_s: f64,
}

impl Room {
    pub fn dims(&self) -> [f64; 3] {
        [self.length_m, self.width_m, self.height_m]
    }

    pub fn volume(&self) -> f64 {
        self.length_m * self.width_m * self.height_m
    }

    pub fn surface_area(&self) -> f64 {
        2.0 * (self.length_m * self.width_m
            + self.length_m * self.height_m
            + self.width_m * self.height_m)
    }

    pub fn contains(&self, p: [f64; 3], margin: f64) -> bool {
        p[0] > margin
            && p[0] < self.length_m - margin
            && p[1] > margin
            && p[1] < self.width_m - margin
            && p[2] > margin
            && p[2] < self.height_m - margin
    }
}

/// Uniform Sabine wall absorption for the room's target T60.
pub fn sabine_absorption(room: &Room) -> Result<f64> {
    let alpha = 0.1611 * room.volume() / (room.surface_area() * room.t60_s);
    if alpha >= 1.0 {
        return Err(Error::InfeasibleT60 { alpha });
    }
    Ok(alpha.min(0.99))
}

/// Wall reflection coefficient `sqrt(1 - alpha)` from the Sabine absorption.
pub fn reflection_from_t60(room: &Room) -> Result<f64> {
    Ok((1.0 - sabine_absorption(room)?).sqrt())
}

/// One image-source arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub delay_samples: f64,
    pub amplitude: f64,
    pub order: u32,
}

/// Image enumeration depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ImageDepth {
    /// All images with at most this many reflections.
    Order(usize),
    /// All images within `c * T60` of propagation past the direct path.
    SpanT60,
}

impl ImageDepth {
    pub fn from_option(max_order: Option<usize>) -> Self {
        match max_order {
            Some(n) => ImageDepth::Order(n),
            None => ImageDepth::SpanT60,
        }
    }
}

/// Enumerate image-source arrivals for one source/receiver pair.
///
/// Images live at `((1-2q)sx + 2 mx Lx, ...)` for lattice `(mx,my,mz)` and
/// parities `(q,j,k)`; the reflection count is
/// `|2mx-q| + |2my-j| + |2mz-k|`. Amplitude is
/// `beta^order / (4 pi distance)`, delay `distance / c`.
pub fn image_arrivals(
    room: &Room,
    source: [f64; 3],
    mic: [f64; 3],
    depth: ImageDepth,
    sample_rate: u32,
) -> Result<Vec<Arrival>> {
    if !room.contains(source, 0.0) {
        return Err(Error::OutsideRoom { what: "source", x: source[0], y: source[1], z: source[2] });
    }
    if !room.contains(mic, 0.0) {
        return Err(Error::OutsideRoom { what: "microphone", x: mic[0], y: mic[1], z: mic[2] });
    }
    let beta = reflection_from_t60(room)?;
    let dims = room.dims();
    let direct = dist(source, mic);
    let (order_cap, dist_cap) = match depth {
        ImageDepth::Order(n) => (n as i64, f64::INFINITY),
        ImageDepth::SpanT60 => (i64::MAX, direct + SPEED_OF_SOUND * room.t60_s),
    };

    // Lattice bounds that cover every admissible image.
    let bound = |dim: f64| -> i64 {
        match depth {
            ImageDepth::Order(n) => (n as i64 + 1) / 2 + 1,
            ImageDepth::SpanT60 => (dist_cap / (2.0 * dim)).ceil() as i64 + 1,
        }
    };
    let (nx, ny, nz) = (bound(dims[0]), bound(dims[1]), bound(dims[2]));

    let fs = sample_rate as f64;
    let mut arrivals = Vec::new();
    for mx in -nx..=nx {
        for my in -ny..=ny {
            for mz in -nz..=nz {
                for q in 0..2i64 {
                    for j in 0..2i64 {
                        for k in 0..2i64 {
                            let order =
                                (2 * mx - q).abs() + (2 * my - j).abs() + (2 * mz - k).abs();
                            if order > order_cap {
                                continue;
                            }
                            let img = [
                                (1 - 2 * q) as f64 * source[0] + 2.0 * mx as f64 * dims[0],
                                (1 - 2 * j) as f64 * source[1] + 2.0 * my as f64 * dims[1],
                                (1 - 2 * k) as f64 * source[2] + 2.0 * mz as f64 * dims[2],
                            ];
                            let d = dist(img, mic);
                            if d > dist_cap || d <= 0.0 {
                                continue;
                            }
                            arrivals.push(Arrival {
                                delay_samples: d / SPEED_OF_SOUND * fs,
                                amplitude: beta.powi(order as i32)
                                    / (4.0 * std::f64::consts::PI * d),
                                order: order as u32,
                            });
                        }
                    }
                }
            }
        }
    }
    arrivals.sort_by(|a, b| a.delay_samples.total_cmp(&b.delay_samples));
    Ok(arrivals)
}

/// Room impulse response between one source and one microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub sample_rate: u32,
    /// Direct-path arrival in (fractional) samples.
    pub direct_path_delay: f64,
}

/// Simulate the RIR by rendering every image arrival with an 81-tap
/// Hann-windowed sinc at its fractional delay.
///
/// A 100 Hz highpass is applied to the rendered taps: the image train is
/// all-positive, so without it the tail accumulates unphysical coherent
/// low-frequency energy that flattens the decay.
pub fn simulate_rir(
    room: &Room,
    source: [f64; 3],
    mic: [f64; 3],
    depth: ImageDepth,
    sample_rate: u32,
) -> Result<Rir> {
    let arrivals = image_arrivals(room, source, mic, depth, sample_rate)?;
    let direct_path_delay = dist(source, mic) / SPEED_OF_SOUND * sample_rate as f64;
    let max_delay = arrivals
        .iter()
        .map(|a| a.delay_samples)
        .fold(0.0f64, f64::max);
    let len = max_delay.ceil() as usize + SINC_HALF_WIDTH as usize + 2;
    let mut taps = vec![0.0; len];
    for a in &arrivals {
        add_windowed_sinc(&mut taps, a.delay_samples, a.amplitude);
    }
    highpass_100hz(&mut taps, sample_rate);
    Ok(Rir { taps, sample_rate, direct_path_delay })
}

/// Second-order Butterworth highpass at 100 Hz (direct form I biquad).
fn highpass_100hz(taps: &mut [f64], sample_rate: u32) {
    let w0 = std::f64::consts::TAU * 100.0 / sample_rate as f64;
    let (sin, cos) = w0.sin_cos();
    let alpha = sin / std::f64::consts::SQRT_2;
    let a0 = 1.0 + alpha;
    let b0 = (1.0 + cos) / 2.0 / a0;
    let b1 = -(1.0 + cos) / a0;
    let b2 = b0;
    let a1 = -2.0 * cos / a0;
    let a2 = (1.0 - alpha) / a0;
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for t in taps.iter_mut() {
        let x0 = *t;
        let y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x0;
        y2 = y1;
        y1 = y0;
        *t = y0;
    }
}

/// Accumulate `amp * sinc(n - delay)` shaped by a Hann window of 81 taps
/// centered on the fractional delay.
fn add_windowed_sinc(taps: &mut [f64], delay: f64, amp: f64) {
    let center = delay.round() as i64;
    for n in center - SINC_HALF_WIDTH..=center + SINC_HALF_WIDTH {
        if n < 0 || n as usize >= taps.len() {
            continue;
        }
        let x = n as f64 - delay;
        let w = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * x / 81.0).cos());
        taps[n as usize] += amp * w * sinc(x);
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// One point source: azimuth in the array frame, horizontal distance from the
/// array center, absolute height, and the utterance assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub azimuth_deg: f64,
    pub distance_m: f64,
    pub height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
}

/// A fully sampled acoustic scene. Together with the utterances it renders
/// deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub room: Room,
    pub pose: ArrayPose,
    pub array: MicArray,
    pub target: SourceSpec,
    pub interferers: Vec<SourceSpec>,
    /// Sensor-noise SNR in dB relative to the clean target image;
    /// `None` disables sensor noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_snr_db: Option<f64>,
    pub seed: u64,
}

impl Scene {
    fn source_position(&self, spec: &SourceSpec) -> [f64; 3] {
        let az = spec.azimuth_deg.to_radians();
        let dir = rotate_z([az.cos(), az.sin(), 0.0], self.pose.yaw_rad);
        [
            self.pose.center_m[0] + spec.distance_m * dir[0],
            self.pose.center_m[1] + spec.distance_m * dir[1],
            spec.height_m,
        ]
    }

    pub fn target_position(&self) -> [f64; 3] {
        self.source_position(&self.target)
    }

    pub fn interferer_positions(&self) -> Vec<[f64; 3]> {
        self.interferers.iter().map(|s| self.source_position(s)).collect()
    }

    /// Target first, then the interferers in sector order.
    pub fn source_positions(&self) -> Vec<[f64; 3]> {
        let mut v = vec![self.target_position()];
        v.extend(self.interferer_positions());
        v
    }

    pub fn mic_positions(&self) -> Vec<[f64; 3]> {
        world_positions(&self.array, &self.pose)
    }
}

/// Interferer azimuth sectors: [20, 340] degrees split into five equal parts.
pub const INTERFERER_SECTORS: [(f64, f64); 5] =
    [(20.0, 84.0), (84.0, 148.0), (148.0, 212.0), (212.0, 276.0), (276.0, 340.0)];

const WHOLE_SCENE_ATTEMPTS: usize = 16;
const PER_SOURCE_ATTEMPTS: usize = 64;

/// Draw a full scene: room dimensions, T60, array pose, the frontal target,
/// and one interferer per azimuth sector. Deterministic under the seed.
pub fn sample_scene(array: &MicArray, seed: u64) -> Result<Scene> {
    let mut rng = seeded_rng(seed, "scene", 0);
    let mut last_reason = String::new();
    for _ in 0..WHOLE_SCENE_ATTEMPTS {
        match try_sample_scene(array, seed, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::InfeasibleScene {
        attempts: WHOLE_SCENE_ATTEMPTS,
        seed,
        reason: last_reason,
    })
}

fn try_sample_scene(
    array: &MicArray,
    seed: u64,
    rng: &mut impl Rng,
) -> std::result::Result<Scene, String> {
    let room = Room {
        length_m: rng.random_range(2.5..5.0),
        width_m: rng.random_range(3.0..9.0),
        height_m: rng.random_range(2.2..3.5),
        t60_s: rng.random_range(0.2..0.5),
    };
    let pose = ArrayPose {
        center_m: [
            rng.random_range(1.0..room.length_m - 1.0),
            rng.random_range(1.0..room.width_m - 1.0),
            1.5,
        ],
        yaw_rad: rng.random_range(0.0..std::f64::consts::TAU),
    };

    let mut scene = Scene {
        room,
        pose,
        array: array.clone(),
        target: SourceSpec { azimuth_deg: 0.0, distance_m: 0.0, height_m: 1.5, utterance: None },
        interferers: Vec::with_capacity(5),
        noise_snr_db: Some(30.0),
        seed,
    };

    // Target on the forward axis at the array height.
    let mut placed = false;
    for _ in 0..PER_SOURCE_ATTEMPTS {
        scene.target.distance_m = rng.random_range(0.3..1.0);
        if room.contains(scene.target_position(), SOURCE_WALL_MARGIN) {
            placed = true;
            break;
        }
    }
    if !placed {
        return Err("target does not fit in front of the array".into());
    }

    let height_dist = Normal::new(1.6f64, 0.28).expect("valid normal");
    for (lo, hi) in INTERFERER_SECTORS {
        let mut placed = false;
        for _ in 0..PER_SOURCE_ATTEMPTS {
            let spec = SourceSpec {
                azimuth_deg: rng.random_range(lo..hi),
                distance_m: rng.random_range(1.0..8.0),
                height_m: height_dist.sample(rng).clamp(0.2, room.height_m - 0.2),
                utterance: None,
            };
            let pos = scene.source_position(&spec);
            if room.contains(pos, SOURCE_WALL_MARGIN) {
                scene.interferers.push(spec);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(format!("no feasible interferer in sector [{lo}, {hi})"));
        }
    }
    Ok(scene)
}

/// Output of [`render_mixture`]: the noisy mixture, the clean target image,
/// and the undesired part (interferers plus sensor noise). The identity
/// `mixture = target_image + undesired` holds exactly.
#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub mixture: AudioBuffer,
    pub target_image: AudioBuffer,
    pub undesired: AudioBuffer,
}

/// Convolve each source with its RIRs, sum, and add per-channel white sensor
/// noise scaled to the scene's SNR against the clean target image.
///
/// `utterances[0]` is the target; the rest follow the interferer order. All
/// signals are harmonized to the target length by truncation/zero-padding.
pub fn render_mixture(
    scene: &Scene,
    utterances: &[AudioBuffer],
    depth: ImageDepth,
) -> Result<RenderedScene> {
    if utterances.len() != 1 + scene.interferers.len() {
        return Err(Error::InvalidConfig(format!(
            "expected {} utterances (target + interferers), got {}",
            1 + scene.interferers.len(),
            utterances.len()
        )));
    }
    if utterances[0].energy() == 0.0 {
        return Err(Error::ZeroPowerTarget);
    }
    let sample_rate = utterances[0].sample_rate();
    let target_len = utterances[0].len();
    let mics = scene.mic_positions();
    let positions = scene.source_positions();

    let mut target_image = AudioBuffer::zeros(mics.len(), target_len, sample_rate);
    let mut interference = AudioBuffer::zeros(mics.len(), target_len, sample_rate);
    for (src_idx, pos) in positions.iter().enumerate() {
        let utt = utterances[src_idx].with_len(target_len);
        let samples = utt.channel(0);
        if samples.iter().all(|&x| x == 0.0) {
            continue;
        }
        for (m, mic) in mics.iter().enumerate() {
            let rir = simulate_rir(&scene.room, *pos, *mic, depth, sample_rate)?;
            let wet = fft_convolve(samples, &rir.taps, Some(target_len));
            let dst = if src_idx == 0 {
                target_image.channel_mut(m)
            } else {
                interference.channel_mut(m)
            };
            for (d, w) in dst.iter_mut().zip(&wet) {
                *d += w;
            }
        }
    }

    let mut undesired = interference;
    if let Some(snr_db) = scene.noise_snr_db {
        let clean_power = target_image.mean_power();
        let sigma = (clean_power / 10f64.powf(snr_db / 10.0)).sqrt();
        let mut rng = seeded_rng(scene.seed, "sensor-noise", 0);
        let normal = Normal::new(0.0, 1.0).expect("valid normal");
        for ch in 0..undesired.channel_count() {
            let dst = undesired.channel_mut(ch);
            for d in dst.iter_mut() {
                *d += sigma * normal.sample(&mut rng);
            }
        }
    }

    let mixture = target_image.add(&undesired)?;
    Ok(RenderedScene { mixture, target_image, undesired })
}
