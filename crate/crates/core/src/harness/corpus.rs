//! Corpus ingestion and a deterministic synthetic speech-like corpus for
//! desk-scale runs.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::harness::seeded_rng;
use crate::wav::{read_wav, write_wav, SampleFormat};

/// One usable utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceEntry {
    pub id: String,
    pub path: PathBuf,
    pub samples: usize,
    pub duration_s: f64,
}

/// A validated utterance inventory plus the files that failed validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<UtteranceEntry>,
    pub rejects: Vec<(PathBuf, String)>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load_utterance(&self, idx: usize) -> Result<AudioBuffer> {
        read_wav(&self.entries[idx].path)
    }
}

/// Scan a directory of WAV files, keeping 16 kHz mono files with nonzero
/// power. Anything else lands in the rejects list with a reason; ordering is
/// deterministic (sorted by file name).
pub fn ingest_corpus(dir: &Path) -> Result<CorpusManifest> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|x| x.to_string_lossy().eq_ignore_ascii_case("wav"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();

    let mut entries = Vec::new();
    let mut rejects = Vec::new();
    for path in paths {
        match read_wav(&path) {
            Err(e) => rejects.push((path, e.to_string())),
            Ok(buf) => {
                if buf.sample_rate() != SAMPLE_RATE {
                    rejects.push((
                        path,
                        format!("sample rate {} Hz, expected 16000 Hz", buf.sample_rate()),
                    ));
                } else if buf.channel_count() != 1 {
                    rejects.push((path, format!("{} channels, expected mono", buf.channel_count())));
                } else if buf.energy() == 0.0 {
                    rejects.push((path, "zero power".into()));
                } else if buf.len() < 512 {
                    rejects.push((path, format!("only {} samples", buf.len())));
                } else {
                    let id = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    entries.push(UtteranceEntry {
                        id,
                        samples: buf.len(),
                        duration_s: buf.len() as f64 / SAMPLE_RATE as f64,
                        path,
                    });
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyCorpus { dir: dir.to_path_buf() });
    }
    Ok(CorpusManifest { entries, rejects })
}

/// Synthesize one speech-shaped utterance: harmonic voicing with a drifting
/// pitch and formant envelope, interleaved with fricative-like noise bursts
/// and pauses.
pub fn synth_utterance(rng: &mut impl Rng, duration_s: f64) -> AudioBuffer {
    let fs = SAMPLE_RATE as f64;
    let n = (duration_s * fs) as usize;
    let mut samples = vec![0.0f64; n];

    let f0_base: f64 = rng.random_range(85.0..165.0);
    let vibrato_hz: f64 = rng.random_range(3.0..6.5);
    let vibrato_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let formant1: f64 = rng.random_range(300.0..900.0);
    let formant2: f64 = rng.random_range(1000.0..2500.0);

    // Harmonic amplitudes with a speech-like downward tilt (the first few
    // harmonics dominate) shaped by two formant resonances.
    let envelope = |f: f64| -> f64 {
        let tilt = (f0_base / f).powf(1.6);
        let r1 = 1.5 * (-((f - formant1) / 150.0).powi(2)).exp();
        let r2 = 0.8 * (-((f - formant2) / 250.0).powi(2)).exp();
        tilt * (1.0 + r1 + r2)
    };

    let mut t = 0usize;
    let mut phases: Vec<f64> = Vec::new();
    while t < n {
        let seg_len = (rng.random_range(0.12..0.35) * fs) as usize;
        let seg_end = (t + seg_len).min(n);
        let kind: f64 = rng.random_range(0.0..1.0);
        if kind < 0.15 {
            // pause
        } else if kind < 0.35 {
            // fricative: first-differenced noise, high-frequency weighted
            let gain: f64 = rng.random_range(0.04..0.12);
            let mut prev: f64 = rng.random_range(-1.0..1.0);
            for x in samples[t..seg_end].iter_mut() {
                let w: f64 = rng.random_range(-1.0..1.0);
                *x = gain * (w - prev);
                prev = w;
            }
        } else {
            // voiced: harmonic stack under a raised-cosine syllable envelope
            let gain: f64 = rng.random_range(0.5..1.0);
            let harmonics = (7600.0 / f0_base) as usize;
            if phases.len() < harmonics {
                phases.resize_with(harmonics, || rng.random_range(0.0..std::f64::consts::TAU));
            }
            for (i, x) in samples[t..seg_end].iter_mut().enumerate() {
                let time = (t + i) as f64 / fs;
                let f0 = f0_base
                    * (1.0 + 0.06 * (std::f64::consts::TAU * vibrato_hz * time + vibrato_phase).sin());
                let syllable =
                    (std::f64::consts::PI * i as f64 / seg_len as f64).sin().max(0.0).powf(0.7);
                let mut v = 0.0;
                for (h, phase) in phases.iter_mut().enumerate().take(harmonics) {
                    let f = (h + 1) as f64 * f0;
                    if f >= 7600.0 {
                        break;
                    }
                    *phase += std::f64::consts::TAU * f / fs;
                    v += envelope(f) * phase.sin();
                }
                *x = gain * syllable * v;
            }
        }
        t = seg_end;
    }

    // Normalize to a fixed RMS.
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        let k = 0.05 / rms;
        for x in samples.iter_mut() {
            *x *= k;
        }
    }
    AudioBuffer::mono(samples, SAMPLE_RATE)
}

/// Write `count` synthetic utterances as 16-bit PCM WAVs named
/// `utt_0000.wav`.. and return their paths. Deterministic under the seed.
pub fn generate_synthetic_corpus(
    dir: &Path,
    count: usize,
    seed: u64,
    duration_range_s: (f64, f64),
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = seeded_rng(seed, "synth-corpus", i as u64);
        let duration = rng.random_range(duration_range_s.0..duration_range_s.1);
        let utt = synth_utterance(&mut rng, duration);
        let path = dir.join(format!("utt_{i:04}.wav"));
        write_wav(&path, &utt, SampleFormat::Pcm16)?;
        paths.push(path);
    }
    Ok(paths)
}
