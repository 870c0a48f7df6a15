//! Scene model: materials, camera, lights, object instances and the fully
//! resolved [`ComposedScene`] that the renderer and annotators consume.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::flood::WaterSurfaceParams;
use crate::geometry::{Aabb, Mat3, Rect, RigidTransform, Vec3};
use crate::mesh::TriangleMesh;
use crate::texture::Texture;

pub const DEFAULT_NEAR_CLIP: f64 = 0.01;

/// Semantic buffer values.
pub mod semantic_id {
    pub const OTHER: u16 = 0;
    pub const CAR: u16 = 1;
    pub const FLOOD: u16 = 2;
    pub const BUILDING: u16 = 3;
    pub const GROUND: u16 = 4;
}

/// Instance IDs share a 16-bit buffer with `instance_id·256 + part`.
pub const MAX_INSTANCE_ID: u16 = 255;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialParams {
    pub base_color: [f64; 3],
    pub roughness: f64,
    pub opacity: f64,
    pub specular: f64,
    pub texture: Option<String>,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            base_color: [0.6, 0.6, 0.6],
            roughness: 0.5,
            opacity: 1.0,
            specular: 0.2,
            texture: None,
        }
    }
}

impl MaterialParams {
    /// Copy with every scalar clamped into [0,1].
    pub fn clamped(&self) -> MaterialParams {
        let c = |x: f64| if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        MaterialParams {
            base_color: self.base_color.map(c),
            roughness: c(self.roughness),
            opacity: c(self.opacity),
            specular: c(self.specular),
            texture: self.texture.clone(),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let mut v = Vec::new();
        if !self.base_color.iter().all(|&c| unit(c)) {
            v.push(format!("material base_color {:?} outside [0,1]", self.base_color));
        }
        for (name, x) in [
            ("roughness", self.roughness),
            ("opacity", self.opacity),
            ("specular", self.specular),
        ] {
            if !unit(x) {
                v.push(format!("material {name} {x} outside [0,1]"));
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    /// Square pixels, principal point at the image center, horizontal field of view in degrees.
    pub fn from_fov(width: u32, height: u32, hfov_deg: f64) -> Intrinsics {
        let f = 0.5 * width as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Intrinsics {
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
        }
    }
}

/// Result of projecting a camera-frame point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub valid: bool,
}

/// Pinhole camera. `extrinsics` maps world to camera coordinates. Pixel
/// `(i, j)` covers `[i, i+1) × [j, j+1)` in continuous image coordinates, so
/// its center is at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    pub extrinsics: RigidTransform,
    pub near_clip: f64,
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, extrinsics: RigidTransform) -> Self {
        CameraModel {
            intrinsics,
            extrinsics,
            near_clip: DEFAULT_NEAR_CLIP,
        }
    }

    /// Camera at `eye` looking at `target` with world z as the up hint.
    pub fn look_at(intrinsics: Intrinsics, eye: Vec3, target: Vec3) -> CameraModel {
        let forward = (target - eye).try_normalized().unwrap_or(Vec3::Y);
        let right = forward
            .cross(Vec3::Z)
            .try_normalized()
            .unwrap_or(Vec3::X);
        let down = forward.cross(right);
        let rotation = Mat3::from_rows(right, down, forward);
        let extrinsics = RigidTransform::new(rotation, -rotation.mul_vec(eye));
        CameraModel::new(intrinsics, extrinsics)
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    pub fn world_to_camera(&self, p: Vec3) -> Vec3 {
        self.extrinsics.apply(p)
    }

    pub fn camera_to_world(&self, p: Vec3) -> Vec3 {
        self.extrinsics.inverse().apply(p)
    }

    /// Camera center in world coordinates, `−Rᵀt`.
    pub fn position(&self) -> Vec3 {
        -self
            .extrinsics
            .rotation
            .transpose()
            .mul_vec(self.extrinsics.translation)
    }

    /// `u = fx·x/z + cx`, `v = fy·y/z + cy`. Valid only in front of the near
    /// plane and inside the image.
    pub fn project_point(&self, p: Vec3) -> Projection {
        let k = &self.intrinsics;
        if !(p.z > self.near_clip) {
            return Projection {
                u: f64::NAN,
                v: f64::NAN,
                valid: false,
            };
        }
        let u = k.fx * p.x / p.z + k.cx;
        let v = k.fy * p.y / p.z + k.cy;
        let valid = (0.0..k.width as f64).contains(&u) && (0.0..k.height as f64).contains(&v);
        Projection { u, v, valid }
    }

    /// Inverse of [`project_point`](Self::project_point) for a known camera-z.
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Vec3 {
        let k = &self.intrinsics;
        Vec3::new((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z)
    }

    /// Camera-frame ray direction through the center of pixel `(i, j)`, scaled to unit z.
    pub fn pixel_ray(&self, i: u32, j: u32) -> Vec3 {
        self.back_project(i as f64 + 0.5, j as f64 + 0.5, 1.0)
    }

    pub fn validate(&self) -> Vec<String> {
        let k = &self.intrinsics;
        let mut v = Vec::new();
        if !(k.fx > 0.0 && k.fy > 0.0) {
            v.push(format!("camera focal lengths must be > 0 (fx={}, fy={})", k.fx, k.fy));
        }
        if k.width == 0 || k.height == 0 {
            v.push("camera resolution must be positive".into());
        }
        if !(0.0 <= k.cx && k.cx < k.width as f64 && 0.0 <= k.cy && k.cy < k.height as f64) {
            v.push(format!(
                "principal point ({}, {}) outside the {}x{} image",
                k.cx, k.cy, k.width, k.height
            ));
        }
        if !self.extrinsics.is_valid(1e-9) {
            v.push("camera extrinsics rotation is not orthonormal with det +1".into());
        }
        if !(self.near_clip > 0.0) {
            v.push(format!("near_clip {} must be > 0", self.near_clip));
        }
        v
    }
}

/// Directional light; `direction` points from surfaces toward the light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightParams {
    pub direction: Vec3,
    pub intensity: f64,
    pub ambient: f64,
}

impl LightParams {
    /// Light from compass `azimuth` (radians, from +x toward +y) at `elevation` above the horizon.
    pub fn from_angles(azimuth: f64, elevation: f64, intensity: f64, ambient: f64) -> Self {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        LightParams {
            direction: Vec3::new(ce * ca, ce * sa, se),
            intensity,
            ambient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticClass {
    Car,
    Flood,
    Other,
}

impl SemanticClass {
    pub fn semantic_id(self) -> u16 {
        match self {
            SemanticClass::Car => semantic_id::CAR,
            SemanticClass::Flood => semantic_id::FLOOD,
            SemanticClass::Other => semantic_id::OTHER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub instance_id: u16,
    pub semantic_class: SemanticClass,
    pub mesh: Arc<TriangleMesh>,
    /// Object to world.
    pub pose: RigidTransform,
    pub material: MaterialParams,
}

impl ObjectInstance {
    pub fn world_aabb(&self) -> Aabb {
        self.mesh.object_aabb().transformed(&self.pose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneryClass {
    Building,
    Ground,
}

impl SceneryClass {
    pub fn semantic_id(self) -> u16 {
        match self {
            SceneryClass::Building => semantic_id::BUILDING,
            SceneryClass::Ground => semantic_id::GROUND,
        }
    }
}

/// Static environment geometry in world coordinates. It is written to the
/// semantic buffer but carries instance ID 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenery {
    pub class: SceneryClass,
    pub mesh: Arc<TriangleMesh>,
    pub material: MaterialParams,
}

/// The water pseudo-instance: parameters plus the patch it is tessellated over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterLayer {
    pub instance_id: u16,
    pub params: WaterSurfaceParams,
    pub extent: Rect,
    /// Cells per side of the tessellation grid.
    pub grid_resolution: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Background {
    Color([f64; 3]),
    /// Stretched over the whole frame at infinite depth.
    Image(Arc<Texture>),
}

impl Default for Background {
    fn default() -> Self {
        Background::Color([0.62, 0.72, 0.85])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedScene {
    pub instances: Vec<ObjectInstance>,
    pub scenery: Vec<Scenery>,
    pub ground_height: f64,
    pub lights: Vec<LightParams>,
    pub camera: CameraModel,
    /// `None` means a non-flooded scene.
    pub water: Option<WaterLayer>,
    pub background: Background,
    pub time: f64,
}

impl ComposedScene {
    pub fn empty(camera: CameraModel) -> Self {
        ComposedScene {
            instances: Vec::new(),
            scenery: Vec::new(),
            ground_height: 0.0,
            lights: vec![LightParams::from_angles(0.8, 0.9, 1.0, 0.25)],
            camera,
            water: None,
            background: Background::default(),
            time: 0.0,
        }
    }

    pub fn is_flooded(&self) -> bool {
        self.water.is_some()
    }

    /// Semantic ID for a non-zero instance ID, if the scene defines it.
    pub fn semantic_of_instance(&self, id: u16) -> Option<u16> {
        if let Some(w) = &self.water {
            if w.instance_id == id {
                return Some(semantic_id::FLOOD);
            }
        }
        self.instances
            .iter()
            .find(|i| i.instance_id == id)
            .map(|i| i.semantic_class.semantic_id())
    }

    pub fn cars(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.instances
            .iter()
            .filter(|i| i.semantic_class == SemanticClass::Car)
    }
}

/// Every violated scene invariant as a human-readable line; empty when valid.
pub fn validate_scene(s: &ComposedScene) -> Vec<String> {
    let mut v = s.camera.validate();
    let mut seen = HashSet::new();
    let mut check_id = |id: u16, v: &mut Vec<String>| {
        if id == 0 || id > MAX_INSTANCE_ID {
            v.push(format!("instance_id {id} outside 1..={MAX_INSTANCE_ID}"));
        }
        if !seen.insert(id) {
            v.push(format!("duplicate instance_id {id}"));
        }
    };
    for inst in &s.instances {
        check_id(inst.instance_id, &mut v);
        if inst.semantic_class == SemanticClass::Flood {
            v.push(format!(
                "instance {} uses the flood class reserved for the water surface",
                inst.instance_id
            ));
        }
        if !inst.pose.is_valid(1e-9) {
            v.push(format!("instance {} pose is not a rigid transform", inst.instance_id));
        }
        if inst.mesh.parts().len() > 256 {
            v.push(format!("instance {} has more than 256 parts", inst.instance_id));
        }
        v.extend(
            inst.material
                .validate()
                .into_iter()
                .map(|m| format!("instance {}: {m}", inst.instance_id)),
        );
    }
    if let Some(w) = &s.water {
        check_id(w.instance_id, &mut v);
        v.extend(w.params.validate());
        if w.grid_resolution == 0 {
            v.push("water grid_resolution must be >= 1".into());
        }
        if !(w.extent.x0 < w.extent.x1 && w.extent.y0 < w.extent.y1) {
            v.push("water extent is empty".into());
        }
    }
    for (i, sc) in s.scenery.iter().enumerate() {
        v.extend(sc.material.validate().into_iter().map(|m| format!("scenery {i}: {m}")));
    }
    for (i, l) in s.lights.iter().enumerate() {
        let n = l.direction.norm();
        if (n - 1.0).abs() > 1e-9 {
            v.push(format!("light {i}: direction is not unit length (|d| = {n})"));
        }
        if !(l.intensity >= 0.0) {
            v.push(format!("light {i}: intensity {} must be >= 0", l.intensity));
        }
        if !(0.0..=1.0).contains(&l.ambient) {
            v.push(format!("light {i}: ambient {} outside [0,1]", l.ambient));
        }
    }
    if !s.ground_height.is_finite() || !s.time.is_finite() {
        v.push("ground_height and time must be finite".into());
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builtin_car;

    fn cam() -> CameraModel {
        CameraModel::new(
            Intrinsics {
                fx: 100.0,
                fy: 100.0,
                cx: 64.0,
                cy: 64.0,
                width: 128,
                height: 128,
            },
            RigidTransform::IDENTITY,
        )
    }

    fn car(id: u16) -> ObjectInstance {
        ObjectInstance {
            instance_id: id,
            semantic_class: SemanticClass::Car,
            mesh: Arc::new(builtin_car(1.5)),
            pose: RigidTransform::IDENTITY,
            material: MaterialParams::default(),
        }
    }

    #[test]
    fn projection_examples() {
        let c = cam();
        assert_eq!(
            c.project_point(Vec3::new(0.0, 0.0, 2.0)),
            Projection { u: 64.0, v: 64.0, valid: true }
        );
        assert_eq!(
            c.project_point(Vec3::new(1.0, 0.0, 2.0)),
            Projection { u: 114.0, v: 64.0, valid: true }
        );
        assert!(!c.project_point(Vec3::new(0.0, 0.0, -1.0)).valid);
        assert!(!c.project_point(Vec3::new(0.0, 0.0, 0.01)).valid);
        assert!(!c.project_point(Vec3::new(10.0, 0.0, 2.0)).valid);
    }

    #[test]
    fn world_to_camera_examples() {
        let mut c = cam();
        let p = Vec3::new(1.5, -2.0, 7.0);
        assert_eq!(c.world_to_camera(p), p);
        c.extrinsics = RigidTransform::from_translation(Vec3::new(0.0, 0.0, -5.0));
        assert_eq!(c.world_to_camera(Vec3::new(0.0, 0.0, 5.0)), Vec3::ZERO);
        assert_eq!(c.position(), Vec3::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn look_at_is_a_valid_vision_frame() {
        let eye = Vec3::new(3.0, -10.0, 5.0);
        let target = Vec3::new(0.0, 0.0, 0.5);
        let c = CameraModel::look_at(Intrinsics::from_fov(64, 48, 60.0), eye, target);
        assert!(c.extrinsics.is_valid(1e-9));
        let p = c.world_to_camera(target);
        assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9 && p.z > 0.0);
        assert!((c.position() - eye).norm() < 1e-9);
        // World up projects to image up (negative camera y).
        assert!(c.world_to_camera(target + Vec3::Z).y < 0.0);
    }

    #[test]
    fn validation_examples() {
        let mut s = ComposedScene::empty(cam());
        s.instances = vec![car(7), car(3)];
        assert!(validate_scene(&s).is_empty(), "{:?}", validate_scene(&s));
        s.instances.push(car(7));
        assert_eq!(validate_scene(&s), vec!["duplicate instance_id 7".to_string()]);
        s.instances.pop();
        s.lights[0].direction = Vec3::ZERO;
        let v = validate_scene(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("light 0"), "{v:?}");
    }

    #[test]
    fn invalid_intrinsics_reported() {
        let mut c = cam();
        c.intrinsics.fx = 0.0;
        c.intrinsics.cx = 128.0;
        assert_eq!(c.validate().len(), 2);
    }

    #[test]
    fn material_clamping() {
        let m = MaterialParams {
            base_color: [1.5, -0.2, 0.5],
            roughness: 2.0,
            opacity: -1.0,
            specular: 0.3,
            texture: None,
        };
        assert!(!m.validate().is_empty());
        let c = m.clamped();
        assert!(c.validate().is_empty());
        assert_eq!(c.base_color, [1.0, 0.0, 0.5]);
    }
}
