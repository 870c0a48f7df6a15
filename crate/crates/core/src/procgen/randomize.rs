use serde::{Deserialize, Serialize};

use super::seed::RngStream;
use crate::error::{Error, Result};
use crate::flood::{level_to_water_height, FloodLevelTable};
use crate::geometry::Vec3;
use crate::scene::{CameraModel, ComposedScene, LightParams};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from(a: [f64; 2]) -> Self {
        Interval::new(a[0], a[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn check(&self) -> Result<()> {
        if self.lo <= self.hi && self.lo.is_finite() && self.hi.is_finite() {
            Ok(())
        } else {
            Err(Error::Range {
                lo: self.lo,
                hi: self.hi,
            })
        }
    }

    pub fn sample(&self, stream: &mut RngStream) -> Result<f64> {
        stream.sample_uniform(self.lo, self.hi)
    }
}

/// Domain-randomization intervals. Angles are in degrees, distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizationRanges {
    /// Camera height above the ground.
    pub camera_height: Interval,
    /// Downward tilt of the optical axis below the horizon.
    pub camera_pitch: Interval,
    /// Horizontal heading of the optical axis, counter-clockwise from +x.
    pub camera_yaw: Interval,
    pub light_intensity: Interval,
    pub light_azimuth: Interval,
    /// Added to the road-aligned heading of each car.
    pub object_yaw: Interval,
    pub object_jitter_xy: Interval,
    /// Cars after the first are centered within this distance of it (per axis).
    pub cluster_radius: f64,
    pub water_level_jitter: Interval,
    /// Scene time in seconds (wave phase).
    pub time: Interval,
}

impl Default for RandomizationRanges {
    fn default() -> Self {
        RandomizationRanges {
            camera_height: Interval::new(2.0, 5.0),
            camera_pitch: Interval::new(12.0, 30.0),
            camera_yaw: Interval::new(0.0, 360.0),
            light_intensity: Interval::new(0.6, 1.2),
            light_azimuth: Interval::new(0.0, 360.0),
            object_yaw: Interval::new(-8.0, 8.0),
            object_jitter_xy: Interval::new(-0.5, 0.5),
            cluster_radius: 8.0,
            water_level_jitter: Interval::new(-0.05, 0.05),
            time: Interval::new(0.0, 30.0),
        }
    }
}

impl RandomizationRanges {
    fn named(&self) -> [(&'static str, Interval); 9] {
        [
            ("camera_height", self.camera_height),
            ("camera_pitch", self.camera_pitch),
            ("camera_yaw", self.camera_yaw),
            ("light_intensity", self.light_intensity),
            ("light_azimuth", self.light_azimuth),
            ("object_yaw", self.object_yaw),
            ("object_jitter_xy", self.object_jitter_xy),
            ("water_level_jitter", self.water_level_jitter),
            ("time", self.time),
        ]
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .named()
            .iter()
            .filter(|(_, i)| i.check().is_err())
            .map(|(n, i)| format!("randomization.{n}: lo {} > hi {}", i.lo, i.hi))
            .collect();
        if !(self.camera_pitch.lo > 0.0 && self.camera_pitch.hi < 90.0) {
            v.push("randomization.camera_pitch must lie within (0, 90) degrees".into());
        }
        if !(self.camera_height.lo > 0.0) {
            v.push("randomization.camera_height must be > 0".into());
        }
        if !(self.cluster_radius > 0.0) {
            v.push("randomization.cluster_radius must be > 0".into());
        }
        if !(self.light_intensity.lo >= 0.0) {
            v.push("randomization.light_intensity must be >= 0".into());
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct RandomizedScene {
    pub scene: ComposedScene,
    /// Non-fatal adjustments, e.g. water jitter clamped into its level band.
    pub notices: Vec<String>,
}

/// Samples camera pose, key light and water level for a template scene.
///
/// The camera looks at the mean center of the cars (or the scenery center
/// when there are no cars) from `camera_height` above the ground, tilted down by
/// `camera_pitch`, heading `camera_yaw`. Light 0 keeps its elevation and gets
/// a new azimuth and intensity. Water base level is the level midpoint plus
/// the sampled jitter. All samples are drawn in a fixed order, whether or not
/// the scene has water.
pub fn randomize_scene(
    template: &ComposedScene,
    ranges: &RandomizationRanges,
    table: &FloodLevelTable,
    stream: &mut RngStream,
) -> Result<RandomizedScene> {
    let problems = ranges.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let height = ranges.camera_height.sample(stream)?;
    let pitch = ranges.camera_pitch.sample(stream)?.to_radians();
    let yaw = ranges.camera_yaw.sample(stream)?.to_radians();
    let intensity = ranges.light_intensity.sample(stream)?;
    let azimuth = ranges.light_azimuth.sample(stream)?.to_radians();
    let jitter = ranges.water_level_jitter.sample(stream)?;
    let time = ranges.time.sample(stream)?;

    let mut scene = template.clone();
    let mut notices = Vec::new();
    let ground = scene.ground_height;

    let centers: Vec<Vec3> = scene.cars().map(|c| c.world_aabb().center()).collect();
    let target = (!centers.is_empty())
        .then(|| centers.iter().fold(Vec3::ZERO, |a, &c| a + c) * (1.0 / centers.len() as f64))
        .or_else(|| {
            let pts = scene.scenery.iter().map(|s| s.mesh.object_aabb().center());
            crate::geometry::Aabb::from_points(pts).map(|b| Vec3::new(b.center().x, b.center().y, ground))
        })
        .unwrap_or(Vec3::new(0.0, 0.0, ground));
    let eye_z = ground + height;
    let drop = (eye_z - target.z).max(0.05);
    let distance = drop / pitch.tan();
    let (sy, cy) = yaw.sin_cos();
    let eye = Vec3::new(target.x - distance * cy, target.y - distance * sy, eye_z);
    let look = eye + Vec3::new(cy * pitch.cos(), sy * pitch.cos(), -pitch.sin());
    let mut camera = CameraModel::look_at(template.camera.intrinsics, eye, look);
    camera.near_clip = template.camera.near_clip;
    scene.camera = camera;

    if let Some(key) = scene.lights.first_mut() {
        let elevation = key.direction.z.clamp(-1.0, 1.0).asin();
        *key = LightParams::from_angles(azimuth, elevation, intensity, key.ambient);
    }

    if let Some(water) = scene.water.as_mut() {
        let h = level_to_water_height(water.params.level_class, table, jitter, ground)?;
        if h.clamped {
            notices.push(format!(
                "water jitter {jitter:.4} m clamped to keep level {}",
                water.params.level_class
            ));
        }
        water.params.base_level = h.base_level;
    }
    scene.time = time;

    Ok(RandomizedScene { scene, notices })
}
