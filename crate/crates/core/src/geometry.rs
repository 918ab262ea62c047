//! Wearable microphone array geometries and poses.
//!
//! Positions are millimeters relative to the array center; the forward-looking
//! axis is +x in the array frame. A versioned geometry file ships the nominal
//! Array 0, its perturbed variants 0a-0f, and four alternative layouts 1-4.

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a perturbed array was derived from its base geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub base: String,
    pub seed: u64,
    pub magnitude_mm: [f64; 2],
}

/// Named microphone positions (mm) with a forward-looking axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicArray {
    pub name: String,
    pub mics_mm: Vec<[f64; 3]>,
    #[serde(default = "default_forward")]
    pub forward_axis: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
}

fn default_forward() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl MicArray {
    /// Number of microphones.
    pub fn mic_count(&self) -> usize {
        self.mics_mm.len()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Centroid of the microphone positions in mm.
    pub fn centroid_mm(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.mics_mm {
            for (axis, v) in p.iter().enumerate() {
                c[axis] += v;
            }
        }
        let n = self.mic_count() as f64;
        c.map(|v| v / n)
    }

    /// Index of the frontal microphone: the one with the largest projection
    /// onto the forward axis.
    pub fn frontal_mic_index(&self) -> usize {
        let mut best = 0;
        let mut best_proj = f64::NEG_INFINITY;
        for (i, p) in self.mics_mm.iter().enumerate() {
            let proj = dot(*p, self.forward_axis);
            if proj > best_proj {
                best_proj = proj;
                best = i;
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        if self.mics_mm.is_empty() {
            return Err(Error::Geometry(format!("array {}: no microphones", self.name)));
        }
        for p in &self.mics_mm {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Geometry(format!("array {}: non-finite position", self.name)));
            }
        }
        for i in 0..self.mics_mm.len() {
            for j in i + 1..self.mics_mm.len() {
                if self.mics_mm[i] == self.mics_mm[j] {
                    return Err(Error::Geometry(format!(
                        "array {}: mics {i} and {j} coincide",
                        self.name
                    )));
                }
            }
        }
        let norm = dot(self.forward_axis, self.forward_axis).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Geometry(format!(
                "array {}: forward axis is not a unit vector",
                self.name
            )));
        }
        Ok(())
    }
}

/// Array placement in a room: center in meters plus yaw about the vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayPose {
    pub center_m: [f64; 3],
    pub yaw_rad: f64,
}

/// The nominal four-microphone glasses geometry (Array 0).
pub fn nominal_array0() -> MicArray {
    MicArray {
        name: "0".into(),
        mics_mm: vec![
            [-29.0, 82.0, -5.0],
            [30.0, -1.0, -1.0],
            [11.0, -77.0, -2.0],
            [-60.0, -83.0, -5.0],
        ],
        forward_axis: [1.0, 0.0, 0.0],
        perturbation: None,
    }
}

/// Displace every microphone by an independent random vector whose norm is
/// uniform in `[lo, hi]` mm with uniformly random direction on the sphere.
pub fn perturb(base: &MicArray, magnitude_mm: (f64, f64), rng: &mut impl Rng) -> MicArray {
    let (lo, hi) = magnitude_mm;
    assert!(lo > 0.0 && hi >= lo, "perturbation magnitude must satisfy 0 < lo <= hi");
    let mics_mm = base
        .mics_mm
        .iter()
        .map(|p| {
            let dir: [f64; 3] = UnitSphere.sample(rng);
            let norm = rng.random_range(lo..=hi);
            [p[0] + norm * dir[0], p[1] + norm * dir[1], p[2] + norm * dir[2]]
        })
        .collect();
    MicArray {
        name: format!("{}p", base.name),
        mics_mm,
        forward_axis: base.forward_axis,
        perturbation: Some(Perturbation {
            base: base.name.clone(),
            seed: 0,
            magnitude_mm: [lo, hi],
        }),
    }
}

/// Rotate a vector about the vertical (z) axis.
pub fn rotate_z(v: [f64; 3], yaw: f64) -> [f64; 3] {
    let (s, c) = yaw.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// World positions of the microphones in meters: rotate the mm offsets by yaw,
/// scale to meters, translate by the pose center.
pub fn world_positions(array: &MicArray, pose: &ArrayPose) -> Vec<[f64; 3]> {
    array
        .mics_mm
        .iter()
        .map(|p| {
            let r = rotate_z(*p, pose.yaw_rad);
            [
                pose.center_m[0] + r[0] / 1000.0,
                pose.center_m[1] + r[1] / 1000.0,
                pose.center_m[2] + r[2] / 1000.0,
            ]
        })
        .collect()
}

/// World-frame forward direction of the glasses.
pub fn world_forward(array: &MicArray, pose: &ArrayPose) -> [f64; 3] {
    rotate_z(array.forward_axis, pose.yaw_rad)
}

/// A versioned collection of named arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySet {
    pub version: u32,
    pub arrays: Vec<MicArray>,
}

impl GeometrySet {
    pub fn parse(text: &str) -> Result<Self> {
        let set: GeometrySet =
            toml::from_str(text).map_err(|e| Error::Geometry(format!("parse failure: {e}")))?;
        Ok(set)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("geometry serializes")
    }

    pub fn get(&self, name: &str) -> Result<&MicArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Geometry(format!("unknown array '{name}'")))
    }

    /// Check invariants on every array, plus reproducibility of perturbed
    /// variants: regenerating from the recorded base/seed/magnitude must give
    /// back the stored coordinates.
    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::BTreeSet::new();
        for a in &self.arrays {
            a.validate()?;
            if !names.insert(a.name.clone()) {
                return Err(Error::Geometry(format!("duplicate array name '{}'", a.name)));
            }
        }
        for a in &self.arrays {
            if let Some(p) = &a.perturbation {
                let base = self.get(&p.base)?;
                let mut rng = crate::harness::seeded_rng(p.seed, "perturb", 0);
                let regen = perturb(base, (p.magnitude_mm[0], p.magnitude_mm[1]), &mut rng);
                if regen.mics_mm.len() != a.mics_mm.len() {
                    return Err(Error::Geometry(format!(
                        "array {}: perturbation mic count mismatch",
                        a.name
                    )));
                }
                for (got, want) in a.mics_mm.iter().zip(&regen.mics_mm) {
                    for axis in 0..3 {
                        if (got[axis] - want[axis]).abs() > 1e-9 {
                            return Err(Error::Geometry(format!(
                                "array {}: stored coordinates do not reproduce from seed {}",
                                a.name, p.seed
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The geometry file shipped with the crate: Array 0, perturbed variants
/// 0a-0f, and alternative layouts 1-4.
pub fn builtin_arrays() -> GeometrySet {
    GeometrySet::parse(include_str!("../assets/arrays.toml")).expect("builtin geometry parses")
}
