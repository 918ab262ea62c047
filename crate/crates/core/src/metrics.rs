//! SI-SDR, bandwise SI-SDR, and group aggregation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::stft::{band_project, StftConfig};

/// Values are capped to this magnitude in dB so aggregation stays finite.
pub const SI_SDR_CAP_DB: f64 = 100.0;

/// Band edges in Hz for bandwise SI-SDR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub edges_hz: Vec<f64>,
}

impl Default for BandSpec {
    fn default() -> Self {
        Self { edges_hz: vec![0.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0] }
    }
}

impl BandSpec {
    pub fn new(edges_hz: Vec<f64>) -> Result<Self> {
        let spec = Self { edges_hz };
        spec.validate(crate::audio::SAMPLE_RATE)?;
        Ok(spec)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if self.edges_hz.len() < 2 {
            return Err(Error::InvalidConfig("need at least two band edges".into()));
        }
        if !self.edges_hz.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("band edges must be strictly increasing".into()));
        }
        if self.edges_hz[0] < 0.0 || *self.edges_hz.last().unwrap() > nyquist {
            return Err(Error::InvalidConfig(format!(
                "band edges must lie within [0, {nyquist}] Hz"
            )));
        }
        Ok(())
    }

    pub fn band_count(&self) -> usize {
        self.edges_hz.len() - 1
    }

    pub fn bands(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.edges_hz.windows(2).map(|w| (w[0], w[1]))
    }

    /// Stable column label for one band, e.g. `band_500_1000_db`.
    pub fn column_name(&self, band: usize) -> String {
        format!(
            "band_{}_{}_db",
            self.edges_hz[band] as i64,
            self.edges_hz[band + 1] as i64
        )
    }
}

/// Scale-invariant SDR in dB, capped to +/-100.
///
/// With `alpha = <est, ref> / ||ref||^2`, the value is
/// `10 log10(||alpha ref||^2 / ||alpha ref - est||^2)`. Lengths are aligned
/// by truncation to the shorter signal.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    let n = estimate.len().min(reference.len());
    if n == 0 {
        return Err(Error::ZeroReference);
    }
    if estimate.len() != reference.len() {
        log::warn!(
            "si_sdr length mismatch ({} vs {}), truncating to {n}",
            estimate.len(),
            reference.len()
        );
    }
    let est = &estimate[..n];
    let rf = &reference[..n];
    let ref_energy: f64 = rf.iter().map(|x| x * x).sum();
    if ref_energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    let est_energy: f64 = est.iter().map(|x| x * x).sum();
    if est_energy == 0.0 {
        return Ok(-SI_SDR_CAP_DB);
    }
    let dot: f64 = est.iter().zip(rf).map(|(e, r)| e * r).sum();
    let alpha = dot / ref_energy;
    let signal: f64 = alpha * alpha * ref_energy;
    let noise: f64 = est
        .iter()
        .zip(rf)
        .map(|(e, r)| {
            let d = alpha * r - e;
            d * d
        })
        .sum();
    if noise == 0.0 {
        return Ok(SI_SDR_CAP_DB);
    }
    if signal == 0.0 {
        return Ok(-SI_SDR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB))
}

/// SI-SDR per band after projecting both signals onto each band.
///
/// Bands where the reference carries less than `1e-12` of its total energy
/// are reported as `None` and excluded from aggregates.
pub fn bandwise_si_sdr(
    estimate: &AudioBuffer,
    reference: &AudioBuffer,
    bands: &BandSpec,
    config: &StftConfig,
) -> Result<Vec<Option<f64>>> {
    bands.validate(reference.sample_rate())?;
    let total_ref = reference.energy();
    if total_ref == 0.0 {
        return Err(Error::ZeroReference);
    }
    let mut out = Vec::with_capacity(bands.band_count());
    for (lo, hi) in bands.bands() {
        let (ref_band, _) = band_project(reference, lo, hi, config)?;
        if ref_band.energy() < 1e-12 * total_ref {
            out.push(None);
            continue;
        }
        let (est_band, _) = band_project(estimate, lo, hi, config)?;
        out.push(Some(si_sdr(est_band.channel(0), ref_band.channel(0))?));
    }
    Ok(out)
}

/// One evaluated utterance: a scene/variant pair with its metric values.
/// `pesq` and `stoi` are reserved columns for external tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub scene_id: String,
    pub array_id: String,
    pub variant: String,
    pub status: String,
    pub si_sdr_db: Option<f64>,
    /// SI-SDR of the unenhanced reference channel against the same clean
    /// reference, for improvement bookkeeping.
    pub si_sdr_noisy_db: Option<f64>,
    pub band_si_sdr_db: Vec<Option<f64>>,
    pub pesq: Option<f64>,
    pub stoi: Option<f64>,
}

/// A named group of arrays to average over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub arrays: Vec<String>,
}

/// Arithmetic means for one (group, variant) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMeans {
    pub count: usize,
    pub si_sdr_db: Option<f64>,
    pub si_sdr_noisy_db: Option<f64>,
    pub band_si_sdr_db: Vec<Option<f64>>,
}

/// Per-utterance records plus per-group, per-variant means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bands: BandSpec,
    pub per_utterance: Vec<UtteranceRecord>,
    /// `group name -> variant -> means`.
    pub per_group: BTreeMap<String, BTreeMap<String, CellMeans>>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

/// Group records by array membership and average per variant.
/// Groups with no member records are omitted with a warning.
pub fn aggregate(
    records: &[UtteranceRecord],
    groups: &[GroupSpec],
    bands: &BandSpec,
) -> MetricsReport {
    let mut per_group = BTreeMap::new();
    for group in groups {
        let members: Vec<&UtteranceRecord> = records
            .iter()
            .filter(|r| group.arrays.iter().any(|a| *a == r.array_id) && r.status == "ok")
            .collect();
        if members.is_empty() {
            log::warn!("group '{}' has no records; omitted from the report", group.name);
            continue;
        }
        let mut variants: BTreeMap<String, CellMeans> = BTreeMap::new();
        let mut names: Vec<&String> = members.iter().map(|r| &r.variant).collect();
        names.sort();
        names.dedup();
        for variant in names {
            let rows: Vec<&&UtteranceRecord> =
                members.iter().filter(|r| &r.variant == variant).collect();
            let band_means = (0..bands.band_count())
                .map(|b| mean(rows.iter().filter_map(|r| r.band_si_sdr_db.get(b).copied().flatten())))
                .collect();
            variants.insert(
                variant.clone(),
                CellMeans {
                    count: rows.len(),
                    si_sdr_db: mean(rows.iter().filter_map(|r| r.si_sdr_db)),
                    si_sdr_noisy_db: mean(rows.iter().filter_map(|r| r.si_sdr_noisy_db)),
                    band_si_sdr_db: band_means,
                },
            );
        }
        per_group.insert(group.name.clone(), variants);
    }
    MetricsReport { bands: bands.clone(), per_utterance: records.to_vec(), per_group }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl MetricsReport {
    /// One CSV row per utterance record, fixed column order.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "scene_id".to_string(),
            "array_id".to_string(),
            "variant".to_string(),
            "status".to_string(),
            "si_sdr_db".to_string(),
            "si_sdr_noisy_db".to_string(),
        ];
        for b in 0..self.bands.band_count() {
            header.push(self.bands.column_name(b));
        }
        header.push("pesq".into());
        header.push("stoi".into());
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.per_utterance {
            let mut row = vec![
                r.scene_id.clone(),
                r.array_id.clone(),
                r.variant.clone(),
                r.status.clone(),
                fmt_opt(r.si_sdr_db),
                fmt_opt(r.si_sdr_noisy_db),
            ];
            for b in 0..self.bands.band_count() {
                row.push(fmt_opt(r.band_si_sdr_db.get(b).copied().flatten()));
            }
            row.push(fmt_opt(r.pesq));
            row.push(fmt_opt(r.stoi));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Nested JSON: band edges, group means, and record count.
    pub fn write_json(&self, w: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct JsonReport<'a> {
            band_edges_hz: &'a [f64],
            records: usize,
            groups: &'a BTreeMap<String, BTreeMap<String, CellMeans>>,
        }
        let doc = JsonReport {
            band_edges_hz: &self.bands.edges_hz,
            records: self.per_utterance.len(),
            groups: &self.per_group,
        };
        serde_json::to_writer_pretty(w, &doc)
            .map_err(|e| Error::InvalidConfig(format!("json serialization: {e}")))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv serialization: {e}"))
}
