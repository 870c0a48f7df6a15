//! Water surface model and submersion-based flood-level labeling.
//!
//! The surface is a sum of sines over still water at `base_level`. Each
//! component travels with the deep-water dispersion relation `ω = √(g·|k|)`.
//! Shading normals come from the analytic gradient, optionally perturbed by a
//! roughness field (procedural value noise or a tiled height texture). Flood
//! labels are derived from the still-water level only, never from the
//! instantaneous wave height, so labels do not depend on the sampled time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::scene::MaterialParams;
use crate::texture::Texture;

pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    pub amplitude: f64,
    /// Wave vector in rad/m, world xy.
    pub wave_vector: [f64; 2],
    pub phase: f64,
}

impl WaveComponent {
    pub fn k_magnitude(&self) -> f64 {
        self.wave_vector[0].hypot(self.wave_vector[1])
    }
}

/// Source of the high-frequency normal perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum WavyTexture {
    #[default]
    Procedural,
    /// Luminance of `texture` as a height map tiled every `tile_size` meters.
    Image { texture: Arc<Texture>, tile_size: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterSurfaceParams {
    /// World z of still water.
    pub base_level: f64,
    pub level_class: u8,
    /// First entry is the main wave.
    pub waves: Vec<WaveComponent>,
    pub gravity: f64,
    pub foam_threshold: f64,
    pub roughness_noise_amp: f64,
    pub material: MaterialParams,
    pub wavy_texture: WavyTexture,
}

impl Default for WaterSurfaceParams {
    /// Muddy, mostly opaque water with two gentle wave trains at level 1.
    fn default() -> Self {
        WaterSurfaceParams {
            base_level: 0.0,
            level_class: 1,
            waves: vec![
                WaveComponent { amplitude: 0.03, wave_vector: [0.8, 0.3], phase: 0.0 },
                WaveComponent { amplitude: 0.015, wave_vector: [-0.4, 1.1], phase: 1.3 },
            ],
            gravity: DEFAULT_GRAVITY,
            foam_threshold: 0.75,
            roughness_noise_amp: 0.05,
            material: MaterialParams {
                base_color: [0.36, 0.31, 0.22],
                roughness: 0.1,
                opacity: 0.85,
                specular: 0.6,
                texture: None,
            },
            wavy_texture: WavyTexture::Procedural,
        }
    }
}

impl WaterSurfaceParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(1..=4).contains(&self.level_class) {
            v.push(format!("water level_class {} outside 1..4", self.level_class));
        }
        if !self.base_level.is_finite() {
            v.push("water base_level is not finite".into());
        }
        if self.waves.is_empty() {
            v.push("flooded water needs at least one wave component".into());
        }
        for (i, w) in self.waves.iter().enumerate() {
            if !(w.amplitude >= 0.0 && w.amplitude.is_finite()) {
                v.push(format!("wave {i}: amplitude {} must be >= 0", w.amplitude));
            }
            if !(w.k_magnitude() > 0.0 && w.k_magnitude().is_finite()) {
                v.push(format!("wave {i}: |k| must be > 0"));
            }
            if !w.phase.is_finite() {
                v.push(format!("wave {i}: phase is not finite"));
            }
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            v.push(format!("gravity {} must be > 0", self.gravity));
        }
        if !(self.foam_threshold > 0.0 && self.foam_threshold <= 1.0) {
            v.push(format!("foam_threshold {} outside (0,1]", self.foam_threshold));
        }
        if !(self.roughness_noise_amp >= 0.0 && self.roughness_noise_amp.is_finite()) {
            v.push("roughness_noise_amp must be >= 0".into());
        }
        if let WavyTexture::Image { tile_size, .. } = &self.wavy_texture {
            if !(*tile_size > 0.0) {
                v.push("wavy texture tile_size must be > 0".into());
            }
        }
        v.extend(self.material.validate().into_iter().map(|m| format!("water {m}")));
        v
    }

    pub fn total_amplitude(&self) -> f64 {
        self.waves.iter().map(|w| w.amplitude).sum()
    }

    fn phase_of(&self, w: &WaveComponent, x: f64, y: f64, t: f64) -> f64 {
        let omega = (self.gravity * w.k_magnitude()).sqrt();
        w.wave_vector[0] * x + w.wave_vector[1] * y + w.phase - omega * t
    }

    /// Surface height `L + Σ Aᵢ·sin(kᵢ·(x,y) + φᵢ − ωᵢ·t)`.
    pub fn wave_height(&self, x: f64, y: f64, t: f64) -> f64 {
        self.base_level
            + self
                .waves
                .iter()
                .map(|w| w.amplitude * self.phase_of(w, x, y, t).sin())
                .sum::<f64>()
    }

    /// Analytic `(∂h/∂x, ∂h/∂y)`.
    pub fn height_gradient(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        self.waves.iter().fold((0.0, 0.0), |(gx, gy), w| {
            let c = w.amplitude * self.phase_of(w, x, y, t).cos();
            (gx + c * w.wave_vector[0], gy + c * w.wave_vector[1])
        })
    }

    /// Unit shading normal: analytic surface normal, then the roughness
    /// perturbation scaled by `roughness_noise_amp`.
    pub fn wave_normal(&self, x: f64, y: f64, t: f64) -> Vec3 {
        let (gx, gy) = self.height_gradient(x, y, t);
        let (px, py) = if self.roughness_noise_amp > 0.0 {
            let (nx, ny) = self.roughness_slope(x, y);
            (nx * self.roughness_noise_amp, ny * self.roughness_noise_amp)
        } else {
            (0.0, 0.0)
        };
        Vec3::new(-gx - px, -gy - py, 1.0).normalized()
    }

    fn roughness_slope(&self, x: f64, y: f64) -> (f64, f64) {
        match &self.wavy_texture {
            WavyTexture::Procedural => {
                const FREQ: f64 = 3.7;
                (
                    value_noise(x * FREQ, y * FREQ, 0x51ed_270b),
                    value_noise(x * FREQ, y * FREQ, 0x7f4a_7c15),
                )
            }
            WavyTexture::Image { texture, tile_size } => {
                let su = texture.width as f64 / tile_size;
                let sv = texture.height as f64 / tile_size;
                let (u, v) = (x * su, y * sv);
                let dx = 0.5
                    * (texture.luminance_wrapped(u + 1.0, v) - texture.luminance_wrapped(u - 1.0, v));
                let dy = 0.5
                    * (texture.luminance_wrapped(u, v + 1.0) - texture.luminance_wrapped(u, v - 1.0));
                (dx, dy)
            }
        }
    }

    /// Crest indicator in [0,1]; zero on flat water.
    pub fn foam_mask(&self, x: f64, y: f64, t: f64) -> f64 {
        let total = self.total_amplitude();
        if total <= 0.0 {
            return 0.0;
        }
        let crest = ((self.wave_height(x, y, t) - self.base_level) / total).clamp(-1.0, 1.0);
        if self.foam_threshold >= 1.0 {
            return if crest >= 1.0 { 1.0 } else { 0.0 };
        }
        ((crest - self.foam_threshold) / (1.0 - self.foam_threshold)).clamp(0.0, 1.0)
    }
}

/// Smooth value noise in [-1, 1] on the integer lattice.
fn value_noise(x: f64, y: f64, salt: u64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let corner = |i: i64, j: i64| {
        let h = crate::procgen::splitmix64(
            salt ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (j as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f),
        );
        (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let a = corner(ix, iy) * (1.0 - sx) + corner(ix + 1, iy) * sx;
    let b = corner(ix, iy + 1) * (1.0 - sx) + corner(ix + 1, iy + 1) * sx;
    a * (1.0 - sy) + b * sy
}

/// Deep-water dispersion `ω = √(g·|k|)`.
pub fn dispersion_omega(k_mag: f64, gravity: f64) -> Result<f64> {
    if !(k_mag > 0.0) || !(gravity > 0.0) || !k_mag.is_finite() || !gravity.is_finite() {
        return Err(Error::Domain(format!(
            "dispersion needs |k| > 0 and g > 0 (got |k| = {k_mag}, g = {gravity})"
        )));
    }
    Ok((gravity * k_mag).sqrt())
}

/// Submersion-ratio cut points separating flood levels 1..4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloodLevelTable {
    pub thresholds: [f64; 3],
    /// Canonical vehicle height in meters.
    pub reference_height: f64,
}

impl Default for FloodLevelTable {
    fn default() -> Self {
        FloodLevelTable {
            thresholds: [0.25, 0.5, 0.75],
            reference_height: 1.5,
        }
    }
}

impl FloodLevelTable {
    pub fn validate(&self) -> Vec<String> {
        let [t1, t2, t3] = self.thresholds;
        let mut v = Vec::new();
        if !(0.0 < t1 && t1 < t2 && t2 < t3 && t3 < 1.0) {
            v.push(format!(
                "flood thresholds must satisfy 0 < t1 < t2 < t3 < 1 (got {:?})",
                self.thresholds
            ));
        }
        if !(self.reference_height > 0.0 && self.reference_height.is_finite()) {
            v.push(format!(
                "reference_height {} must be > 0",
                self.reference_height
            ));
        }
        v
    }

    /// Closed ratio band `[lo, hi]` for a flooded level 1..4.
    pub fn band(&self, level: u8) -> Result<(f64, f64)> {
        let [t1, t2, t3] = self.thresholds;
        match level {
            1 => Ok((0.0, t1)),
            2 => Ok((t1, t2)),
            3 => Ok((t2, t3)),
            4 => Ok((t3, 1.0)),
            l => Err(Error::Domain(format!(
                "flood level {l} has no water height (expected 1..4)"
            ))),
        }
    }
}

/// Still-water level for a level class, and whether the jitter had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelHeight {
    pub base_level: f64,
    pub clamped: bool,
}

/// `ground + f(level)·H_ref + jitter` where `f` is the band midpoint. Jitter
/// that would leave the band is clamped so that a canonical vehicle resting on
/// the ground still labels as `level`.
pub fn level_to_water_height(
    level: u8,
    table: &FloodLevelTable,
    jitter: f64,
    ground_height: f64,
) -> Result<LevelHeight> {
    let (lo, hi) = table.band(level)?;
    if !jitter.is_finite() {
        return Err(Error::Domain("non-finite water level jitter".into()));
    }
    let h = table.reference_height;
    let mid = 0.5 * (lo + hi) * h;
    // Bands are (lo, hi] except level 1 which includes 0 and level 4 which includes 1.
    let eps = 1e-6 * h;
    let min = if level == 1 { 0.0 } else { lo * h + eps };
    let max = if level == 4 { h } else { hi * h - eps };
    let offset = mid + jitter;
    let clamped_offset = offset.clamp(min, max);
    Ok(LevelHeight {
        base_level: ground_height + clamped_offset,
        clamped: clamped_offset != offset,
    })
}

/// Fraction of the vehicle's vertical extent below still water, in [0,1].
pub fn submersion_ratio(vehicle: &Aabb, base_level: f64) -> Result<f64> {
    let height = vehicle.max.z - vehicle.min.z;
    if !(height > 0.0) {
        return Err(Error::Domain(format!(
            "vehicle box has non-positive height {height}"
        )));
    }
    Ok(((base_level - vehicle.min.z) / height).clamp(0.0, 1.0))
}

/// Level 0 when not flooded, else 1..4 by the threshold table (upper bounds inclusive).
pub fn flood_level_label(flooded: bool, ratio: f64, table: &FloodLevelTable) -> Result<u8> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!("submersion ratio {ratio} outside [0,1]")));
    }
    if !flooded {
        return Ok(0);
    }
    let [t1, t2, t3] = table.thresholds;
    Ok(if ratio <= t1 {
        1
    } else if ratio <= t2 {
        2
    } else if ratio <= t3 {
        3
    } else {
        4
    })
}
