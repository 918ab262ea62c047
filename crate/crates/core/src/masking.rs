//! Complex masks: the oracle complex ideal ratio mask, mask application, and
//! the binary mask-file format that external estimators plug into.
//!
//! Mask file layout (little-endian): magic `HBMK`, version byte `1`,
//! `bins: u32`, `frames: u32`, then `bins * frames` interleaved re/im `f32`
//! pairs in bin-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::HybridInput;
use crate::stft::Spectrogram;

/// Default mask magnitude clip.
pub const DEFAULT_CLIP: f64 = 10.0;

const MASK_MAGIC: &[u8; 4] = b"HBMK";
const MASK_VERSION: u8 = 1;

/// Complex per-bin mask with a magnitude bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    data: Array2<Complex64>,
    clip: f64,
}

impl Mask {
    /// Wrap a tensor, clipping magnitudes above `clip` while preserving phase.
    pub fn new(mut data: Array2<Complex64>, clip: f64) -> Result<Self> {
        if clip <= 0.0 || !clip.is_finite() {
            return Err(Error::InvalidConfig(format!("mask clip must be positive, got {clip}")));
        }
        for v in data.iter_mut() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidConfig("non-finite mask entry".into()));
            }
            let mag = v.norm();
            if mag > clip {
                *v *= clip / mag;
            }
        }
        Ok(Self { data, clip })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn bins(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }
}

/// Anything that can produce a mask for a model input and reference channel.
/// This is the seam where a trained estimator would sit.
pub trait MaskProvider {
    fn produce(&self, model_input: &HybridInput, reference: &Spectrogram) -> Result<Mask>;
}

/// Oracle complex ideal ratio mask: `M = S / X_ref` wherever the reference
/// has energy, zero elsewhere, magnitude-clipped.
///
/// The silence guard is relative: bins with `|X_ref|` below `1e-12` of the
/// reference RMS magnitude count as inactive.
pub fn oracle_cirm(clean_ref: &Spectrogram, reference: &Spectrogram, clip: f64) -> Result<Mask> {
    if clean_ref.channels() != 1 || reference.channels() != 1 {
        return Err(Error::ShapeMismatch {
            expected: "single-channel spectrograms".into(),
            found: format!("{} and {} channels", clean_ref.channels(), reference.channels()),
        });
    }
    if clean_ref.bins() != reference.bins() || clean_ref.frames() != reference.frames() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", reference.bins(), reference.frames()),
            found: format!("{}x{}", clean_ref.bins(), clean_ref.frames()),
        });
    }
    let n = (reference.bins() * reference.frames()) as f64;
    let rms = (reference.data().iter().map(|v| v.norm_sqr()).sum::<f64>() / n).sqrt();
    let eps = 1e-12 * rms;
    let mut data = Array2::zeros((reference.bins(), reference.frames()));
    for k in 0..reference.bins() {
        for i in 0..reference.frames() {
            let x = reference.data()[[0, k, i]];
            data[[k, i]] = if x.norm() > eps {
                clean_ref.data()[[0, k, i]] / x
            } else {
                Complex64::ZERO
            };
        }
    }
    Mask::new(data, clip)
}

/// Oracle provider wrapping the clean reference-channel spectrogram.
pub struct OracleCirm {
    pub clean_ref: Spectrogram,
    pub clip: f64,
}

impl MaskProvider for OracleCirm {
    fn produce(&self, _model_input: &HybridInput, reference: &Spectrogram) -> Result<Mask> {
        oracle_cirm(&self.clean_ref, reference, self.clip)
    }
}

/// Elementwise complex product `S_hat = M * X_ref`.
pub fn apply_mask(mask: &Mask, reference: &Spectrogram) -> Result<Spectrogram> {
    if reference.channels() != 1
        || mask.bins() != reference.bins()
        || mask.frames() != reference.frames()
    {
        return Err(Error::ShapeMismatch {
            expected: format!("1x{}x{}", mask.bins(), mask.frames()),
            found: format!(
                "{}x{}x{}",
                reference.channels(),
                reference.bins(),
                reference.frames()
            ),
        });
    }
    let mut out = Spectrogram::zeros(1, reference.frames(), reference.config(), reference.sample_rate());
    for k in 0..reference.bins() {
        for i in 0..reference.frames() {
            out.data_mut()[[0, k, i]] = mask.data[[k, i]] * reference.data()[[0, k, i]];
        }
    }
    Ok(out)
}

/// Write a mask in the documented binary format.
pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MASK_MAGIC)?;
    w.write_all(&[MASK_VERSION])?;
    w.write_all(&(mask.bins() as u32).to_le_bytes())?;
    w.write_all(&(mask.frames() as u32).to_le_bytes())?;
    for k in 0..mask.bins() {
        for i in 0..mask.frames() {
            let v = mask.data[[k, i]];
            w.write_all(&(v.re as f32).to_le_bytes())?;
            w.write_all(&(v.im as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load a mask, checking the header against the expected `(bins, frames)`
/// shape and applying the magnitude clip.
pub fn load_mask(path: &Path, expected: (usize, usize), clip: f64) -> Result<Mask> {
    let fail = |reason: String| Error::MaskFormat { path: path.to_path_buf(), reason };
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 13];
    r.read_exact(&mut header).map_err(|e| fail(format!("short header: {e}")))?;
    if &header[..4] != MASK_MAGIC {
        return Err(fail("bad magic, expected HBMK".into()));
    }
    if header[4] != MASK_VERSION {
        return Err(fail(format!("unsupported version {}", header[4])));
    }
    let bins = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    let frames = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
    if (bins, frames) != expected {
        return Err(fail(format!(
            "shape mismatch: expected {}x{}, found {bins}x{frames}",
            expected.0, expected.1
        )));
    }
    let mut payload = vec![0u8; bins * frames * 8];
    r.read_exact(&mut payload).map_err(|e| fail(format!("short payload: {e}")))?;
    let mut data = Array2::zeros((bins, frames));
    for k in 0..bins {
        for i in 0..frames {
            let off = (k * frames + i) * 8;
            let re = f32::from_le_bytes(payload[off..off + 4].try_into().unwrap()) as f64;
            let im = f32::from_le_bytes(payload[off + 4..off + 8].try_into().unwrap()) as f64;
            data[[k, i]] = Complex64::new(re, im);
        }
    }
    Mask::new(data, clip)
}
