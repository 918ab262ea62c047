//! Experiment orchestration: configuration, presets, deterministic scene
//! generation, per-variant enhancement, and report emission.
//!
//! Everything downstream of the master seed is derived through splittable
//! per-scene RNG streams, so results are byte-identical across runs and
//! thread counts.

pub mod corpus;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::beamforming::build_bank;
use crate::error::{Error, Result};
use crate::geometry::{builtin_arrays, GeometrySet, MicArray};
use crate::hybrid::{build_model_input, select_reference, ModelConfig, ReferenceKind, Variant};
use crate::masking::{apply_mask, load_mask, oracle_cirm, save_mask, Mask};
use crate::metrics::{
    aggregate, bandwise_si_sdr, si_sdr, BandSpec, GroupSpec, MetricsReport, UtteranceRecord,
};
use crate::room::{render_mixture, sample_scene, ImageDepth, Scene};
use crate::stft::{istft, stft, StftConfig};
use crate::wav::{read_wav_16k, write_wav, SampleFormat};
use corpus::CorpusManifest;

/// Derive an independent deterministic RNG stream from a master seed, a
/// stream label, and an index. Scheduling-independent by construction.
pub fn seeded_rng(master: u64, stream: &str, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let h = fnv1a(stream);
    let mut state = master;
    for (i, word) in [master, h, index, master ^ h].into_iter().enumerate() {
        state = state.wrapping_add(word).wrapping_add(0x9e3779b97f4a7c15);
        seed[i * 8..(i + 1) * 8].copy_from_slice(&splitmix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Single derived seed with the same mixing as [`seeded_rng`].
pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    let h = fnv1a(stream);
    let state = splitmix(master.wrapping_add(h).wrapping_add(0x9e3779b97f4a7c15));
    splitmix(state.wrapping_add(index).wrapping_add(0x9e3779b97f4a7c15))
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// One array in an experiment and whether it counts as seen at train time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySelection {
    pub id: String,
    #[serde(default)]
    pub seen: bool,
}

fn default_cutoff() -> f64 {
    crate::hybrid::DEFAULT_CUTOFF_HZ
}

fn default_clip() -> f64 {
    crate::masking::DEFAULT_CLIP
}

fn default_band_edges() -> Vec<f64> {
    BandSpec::default().edges_hz
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

/// Full experiment description; serializable as the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub arrays: Vec<ArraySelection>,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    pub scenes_per_array: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
    /// Image-source reflection order; omit to span the room's T60.
    #[serde(default)]
    pub max_order: Option<usize>,
    #[serde(default = "default_band_edges")]
    pub band_edges_hz: Vec<f64>,
    #[serde(default)]
    pub save_audio: bool,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_clip")]
    pub mask_clip: f64,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn bands(&self) -> Result<BandSpec> {
        BandSpec::new(self.band_edges_hz.clone())
    }

    pub fn validate(&self, geometry: &GeometrySet) -> Result<()> {
        if self.scenes_per_array == 0 {
            return Err(Error::InvalidConfig("scenes_per_array must be >= 1".into()));
        }
        if self.arrays.is_empty() {
            return Err(Error::InvalidConfig("no arrays selected".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("no variants selected".into()));
        }
        for a in &self.arrays {
            geometry.get(&a.id)?;
        }
        for g in &self.groups {
            for id in &g.arrays {
                geometry.get(id)?;
            }
        }
        crate::hybrid::cutoff_bin(self.cutoff_hz, &StftConfig::default(), SAMPLE_RATE)?;
        self.bands()?;
        if self.mask_clip <= 0.0 {
            return Err(Error::InvalidConfig("mask_clip must be positive".into()));
        }
        Ok(())
    }

    /// Experiment 1: nominal-geometry design. Evaluates Array 0 and its
    /// perturbed variants, grouped Ref / Small / Large.
    pub fn experiment_1(corpus_dir: PathBuf, output_dir: PathBuf) -> Self {
        let ids = ["0", "0a", "0b", "0c", "0d", "0e", "0f"];
        Self {
            name: "experiment-1".into(),
            corpus_dir,
            output_dir,
            arrays: ids
                .iter()
                .map(|id| ArraySelection { id: (*id).to_string(), seen: *id == "0" })
                .collect(),
            groups: vec![
                GroupSpec { name: "Ref".into(), arrays: vec!["0".into()] },
                GroupSpec {
                    name: "Small".into(),
                    arrays: vec!["0a".into(), "0b".into(), "0c".into()],
                },
                GroupSpec {
                    name: "Large".into(),
                    arrays: vec!["0d".into(), "0e".into(), "0f".into()],
                },
            ],
            scenes_per_array: 10,
            master_seed: 0,
            variants: Variant::ALL.to_vec(),
            cutoff_hz: default_cutoff(),
            max_order: Some(8),
            band_edges_hz: default_band_edges(),
            save_audio: false,
            jobs: 0,
            mask_clip: default_clip(),
        }
    }

    /// Experiment 2: multi-geometry design over all eleven arrays, grouped
    /// Seen vs Unseen with unseen = {0c, 1, 4}.
    pub fn experiment_2(corpus_dir: PathBuf, output_dir: PathBuf) -> Self {
        let unseen = ["0c", "1", "4"];
        let all = ["0", "0a", "0b", "0c", "0d", "0e", "0f", "1", "2", "3", "4"];
        let seen: Vec<String> =
            all.iter().filter(|id| !unseen.contains(id)).map(|s| s.to_string()).collect();
        Self {
            name: "experiment-2".into(),
            corpus_dir,
            output_dir,
            arrays: all
                .iter()
                .map(|id| ArraySelection { id: (*id).to_string(), seen: !unseen.contains(id) })
                .collect(),
            groups: vec![
                GroupSpec { name: "Seen".into(), arrays: seen },
                GroupSpec {
                    name: "Unseen".into(),
                    arrays: unseen.iter().map(|s| s.to_string()).collect(),
                },
            ],
            scenes_per_array: 10,
            master_seed: 0,
            variants: Variant::ALL.to_vec(),
            cutoff_hz: default_cutoff(),
            max_order: Some(8),
            band_edges_hz: default_band_edges(),
            save_audio: false,
            jobs: 0,
            mask_clip: default_clip(),
        }
    }
}

/// Where enhancement masks come from.
#[derive(Debug, Clone)]
pub enum MaskSource {
    /// Oracle complex ideal ratio mask from the clean reference channel.
    Oracle,
    /// Directory of `<scene_id>__<variant>.hbmk` files from an external
    /// estimator.
    ExternalDir(PathBuf),
}

/// Which artifacts a run writes.
#[derive(Debug, Clone, Copy)]
pub struct OutputSet {
    pub scene_manifests: bool,
    pub mixture_audio: bool,
    pub enhanced_audio: bool,
    pub masks: bool,
    pub reports: bool,
}

impl OutputSet {
    /// Everything; audio and mask dumps still honor `save_audio`.
    pub fn full(save_audio: bool) -> Self {
        Self {
            scene_manifests: true,
            mixture_audio: save_audio,
            enhanced_audio: save_audio,
            masks: save_audio,
            reports: true,
        }
    }

    /// Scene rendering only (`gen`).
    pub fn generate() -> Self {
        Self {
            scene_manifests: true,
            mixture_audio: true,
            enhanced_audio: false,
            masks: false,
            reports: false,
        }
    }

    /// Enhancement artifacts (`enhance`).
    pub fn enhance(save_audio: bool) -> Self {
        Self {
            scene_manifests: true,
            mixture_audio: save_audio,
            enhanced_audio: true,
            masks: true,
            reports: false,
        }
    }

    /// Metrics and reports only (`eval`).
    pub fn evaluate() -> Self {
        Self {
            scene_manifests: true,
            mixture_audio: false,
            enhanced_audio: false,
            masks: false,
            reports: true,
        }
    }
}

/// Everything needed to re-render one scene standalone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub scene_id: String,
    pub scene: Scene,
    pub utterance_paths: Vec<PathBuf>,
    pub max_order: Option<usize>,
    pub stft: StftConfig,
    pub cutoff_hz: f64,
    pub mask_clip: f64,
}

/// Run a full experiment: sample and render every scene, enhance with each
/// variant, score, and (optionally) emit reports under the output directory.
pub fn run_experiment(
    config: &ExperimentConfig,
    mask_source: &MaskSource,
    outputs: &OutputSet,
) -> Result<MetricsReport> {
    let geometry = builtin_arrays();
    config.validate(&geometry)?;
    let manifest = corpus::ingest_corpus(&config.corpus_dir)?;
    if manifest.len() < 6 {
        return Err(Error::InvalidConfig(format!(
            "corpus must contain at least 6 utterances, found {}",
            manifest.len()
        )));
    }
    let bands = config.bands()?;

    let mut tasks = Vec::new();
    for sel in &config.arrays {
        let array = geometry.get(&sel.id)?.clone();
        for scene_idx in 0..config.scenes_per_array {
            tasks.push((array.clone(), scene_idx));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Result<Vec<Vec<UtteranceRecord>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(array, scene_idx)| {
                process_scene(config, &manifest, &bands, array, *scene_idx, mask_source, outputs)
            })
            .collect()
    });
    let records: Vec<UtteranceRecord> = rows?.into_iter().flatten().collect();

    let report = aggregate(&records, &config.groups, &bands);
    if outputs.reports {
        std::fs::create_dir_all(&config.output_dir)?;
        report.write_csv(BufWriter::new(File::create(config.output_dir.join("report.csv"))?))?;
        report.write_json(BufWriter::new(File::create(config.output_dir.join("report.json"))?))?;
    }
    Ok(report)
}

fn process_scene(
    config: &ExperimentConfig,
    manifest: &CorpusManifest,
    bands: &BandSpec,
    array: &MicArray,
    scene_idx: usize,
    mask_source: &MaskSource,
    outputs: &OutputSet,
) -> Result<Vec<UtteranceRecord>> {
    let scene_id = format!("{}_{:03}", array.name, scene_idx);
    let scene_seed =
        derive_seed(config.master_seed, &format!("scene/{}", array.name), scene_idx as u64);
    let mut scene = sample_scene(array, scene_seed)?;

    // Target + five interferer utterances, drawn without replacement.
    let mut rng =
        seeded_rng(config.master_seed, &format!("utterances/{}", array.name), scene_idx as u64);
    let picks = rand::seq::index::sample(&mut rng, manifest.len(), 6).into_vec();
    scene.target.utterance = Some(manifest.entries[picks[0]].id.clone());
    for (spec, &p) in scene.interferers.iter_mut().zip(&picks[1..]) {
        spec.utterance = Some(manifest.entries[p].id.clone());
    }
    let utterances: Vec<AudioBuffer> = picks
        .iter()
        .map(|&p| read_wav_16k(&manifest.entries[p].path))
        .collect::<Result<_>>()?;

    let depth = ImageDepth::from_option(config.max_order);
    let rendered = render_mixture(&scene, &utterances, depth)?;
    let target_len = utterances[0].len();
    let dry_target = &utterances[0];

    let dir = config.output_dir.join(&array.name).join(&scene_id);
    if outputs.scene_manifests {
        let doc = SceneManifest {
            scene_id: scene_id.clone(),
            scene: scene.clone(),
            utterance_paths: picks.iter().map(|&p| manifest.entries[p].path.clone()).collect(),
            max_order: config.max_order,
            stft: StftConfig::default(),
            cutoff_hz: config.cutoff_hz,
            mask_clip: config.mask_clip,
        };
        std::fs::create_dir_all(&dir)?;
        let text = toml::to_string(&doc)
            .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
        std::fs::write(dir.join("manifest.toml"), text)?;
    }
    if outputs.mixture_audio {
        write_wav(&dir.join("mixture.wav"), &rendered.mixture, SampleFormat::Float32)?;
        write_wav(&dir.join("target_image.wav"), &rendered.target_image, SampleFormat::Float32)?;
    }

    let stft_cfg = StftConfig::default();
    let mic_spec = stft(&rendered.mixture, &stft_cfg)?;
    let clean_spec = stft(&rendered.target_image, &stft_cfg)?;
    let bank = build_bank(array, &stft_cfg, SAMPLE_RATE);
    let beams_mix = bank.apply(&mic_spec)?;
    let beams_clean = bank.apply(&clean_spec)?;

    let frontal = array.frontal_mic_index();
    let mut records = Vec::with_capacity(1 + config.variants.len());

    // Unenhanced row: the frontal microphone of the noisy mixture, scored
    // against the clean target image at the same microphone; bandwise values
    // are scored against the dry target utterance.
    let noisy_time = rendered.mixture.extract_channel(frontal);
    let clean_frontal = rendered.target_image.extract_channel(frontal);
    records.push(UtteranceRecord {
        scene_id: scene_id.clone(),
        array_id: array.name.clone(),
        variant: "noisy".into(),
        status: "ok".into(),
        si_sdr_db: Some(si_sdr(noisy_time.channel(0), clean_frontal.channel(0))?),
        si_sdr_noisy_db: None,
        band_si_sdr_db: bandwise_si_sdr(&noisy_time, dry_target, bands, &stft_cfg)?,
        pesq: None,
        stoi: None,
    });

    for &variant in &config.variants {
        let model = ModelConfig { variant, cutoff_hz: config.cutoff_hz };
        let model_input = build_model_input(&model, &mic_spec, &beams_mix)?;
        let ref_mix = select_reference(&model, &mic_spec, &beams_mix, array)?;
        let ref_clean = select_reference(&model, &clean_spec, &beams_clean, array)?;

        let mask: Option<Mask> = match mask_source {
            MaskSource::Oracle => Some(oracle_cirm(&ref_clean, &ref_mix, config.mask_clip)?),
            MaskSource::ExternalDir(mask_dir) => {
                let path = mask_dir.join(format!("{scene_id}__{variant}.hbmk"));
                match load_mask(&path, (ref_mix.bins(), ref_mix.frames()), config.mask_clip) {
                    Ok(m) => Some(m),
                    Err(e) => {
                        log::warn!("scene {scene_id} variant {variant}: {e}");
                        None
                    }
                }
            }
        };
        let Some(mask) = mask else {
            records.push(UtteranceRecord {
                scene_id: scene_id.clone(),
                array_id: array.name.clone(),
                variant: variant.name().into(),
                status: "missing-mask".into(),
                si_sdr_db: None,
                si_sdr_noisy_db: None,
                band_si_sdr_db: vec![None; bands.band_count()],
                pesq: None,
                stoi: None,
            });
            continue;
        };
        // The per-variant input tensor is what an external estimator would
        // consume; the oracle path only needs the reference pair.
        debug_assert_eq!(model_input.data.shape()[2], ref_mix.frames());

        let enhanced_spec = apply_mask(&mask, &ref_mix)?;
        let enhanced = istft(&enhanced_spec).with_len(target_len);

        let (clean_ref_time, ref_mix_time) = match variant.reference_kind() {
            ReferenceKind::FrontalMic => (clean_frontal.clone(), noisy_time.clone()),
            ReferenceKind::ForwardBeam => {
                (istft(&ref_clean).with_len(target_len), istft(&ref_mix).with_len(target_len))
            }
        };

        if outputs.enhanced_audio {
            write_wav(
                &dir.join(format!("enhanced_{variant}.wav")),
                &enhanced,
                SampleFormat::Float32,
            )?;
        }
        if outputs.masks {
            save_mask(&mask, &dir.join("masks").join(format!("{variant}.hbmk")))?;
        }

        records.push(UtteranceRecord {
            scene_id: scene_id.clone(),
            array_id: array.name.clone(),
            variant: variant.name().into(),
            status: "ok".into(),
            si_sdr_db: Some(si_sdr(enhanced.channel(0), clean_ref_time.channel(0))?),
            si_sdr_noisy_db: Some(si_sdr(ref_mix_time.channel(0), clean_ref_time.channel(0))?),
            band_si_sdr_db: bandwise_si_sdr(&enhanced, dry_target, bands, &stft_cfg)?,
            pesq: None,
            stoi: None,
        });
    }

    if outputs.reports {
        let scene_report = aggregate(&records, &[], bands);
        std::fs::create_dir_all(&dir)?;
        scene_report.write_csv(BufWriter::new(File::create(dir.join("metrics.csv"))?))?;
    }
    Ok(records)
}

/// Re-render a scene from its manifest; lets downstream tools reproduce any
/// scene exactly.
pub fn rerender_from_manifest(
    manifest_path: &Path,
) -> Result<(SceneManifest, crate::room::RenderedScene)> {
    let text = std::fs::read_to_string(manifest_path)?;
    let doc: SceneManifest = toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", manifest_path.display())))?;
    let utterances: Vec<AudioBuffer> =
        doc.utterance_paths.iter().map(|p| read_wav_16k(p)).collect::<Result<_>>()?;
    let rendered =
        render_mixture(&doc.scene, &utterances, ImageDepth::from_option(doc.max_order))?;
    Ok((doc, rendered))
}

/// Write one beam's directivity to CSV: a row per azimuth degree, one gain
/// column per requested frequency.
pub fn write_beampattern_csv(
    array: &MicArray,
    beam: &str,
    freqs_hz: &[f64],
    w: impl Write,
) -> Result<()> {
    let cfg = StftConfig::default();
    let bank = build_bank(array, &cfg, SAMPLE_RATE);
    let d = bank
        .labels
        .iter()
        .position(|l| l == beam)
        .ok_or_else(|| Error::InvalidConfig(format!("no beam labeled '{beam}'")))?;
    let weights = bank.direction_weights(d);
    let azimuths: Vec<f64> = (0..360).map(|a| (a as f64).to_radians()).collect();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["azimuth_deg".to_string()];
    header.extend(freqs_hz.iter().map(|f| format!("gain_{}hz", *f as i64)));
    out.write_record(&header).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    let curves: Vec<Vec<f64>> = freqs_hz
        .iter()
        .map(|&f| crate::beamforming::directivity(&weights, array, f, &azimuths, SAMPLE_RATE))
        .collect::<Result<_>>()?;
    for (i, az) in azimuths.iter().enumerate() {
        let mut row = vec![format!("{:.1}", az.to_degrees())];
        row.extend(curves.iter().map(|c| format!("{:.8}", c[i])));
        out.write_record(&row).map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
    }
    out.flush()?;
    Ok(())
}
