//! Brute-force nearest-hit ray casting: every pixel ray against every
//! triangle, no acceleration structure. Used as the reference the rasterizer
//! is checked against.

use serde::Serialize;

use super::triangles::SceneTriangles;
use crate::geometry::Vec3;
use crate::scene::{CameraModel, ComposedScene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitRecord {
    pub hit: bool,
    /// Camera-z of the hit point.
    pub depth: f64,
    pub world_point: Vec3,
    pub world_normal: Vec3,
    pub instance_id: u16,
    pub part_index: u16,
    pub semantic_id: u16,
}

impl HitRecord {
    pub const MISS: HitRecord = HitRecord {
        hit: false,
        depth: 0.0,
        world_point: Vec3::ZERO,
        world_normal: Vec3::ZERO,
        instance_id: 0,
        part_index: 0,
        semantic_id: 0,
    };
}

/// Möller–Trumbore intersection of the ray `origin + t·dir` with a triangle.
/// Returns `(t, b1, b2)`; edges are inclusive.
pub(crate) fn intersect_triangle(origin: Vec3, dir: Vec3, tri: &[Vec3; 3]) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - tri[0];
    let b1 = tvec.dot(pvec) * inv;
    if !(0.0..=1.0).contains(&b1) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let b2 = dir.dot(qvec) * inv;
    if b2 < 0.0 || b1 + b2 > 1.0 {
        return None;
    }
    Some((e2.dot(qvec) * inv, b1, b2))
}

/// Reference renderer bound to one scene and camera.
pub struct RaycastReference<'a> {
    tris: SceneTriangles<'a>,
    camera: CameraModel,
    camera_space: Vec<[Vec3; 3]>,
}

impl<'a> RaycastReference<'a> {
    pub fn new(scene: &'a ComposedScene, camera: &CameraModel) -> Self {
        let tris = SceneTriangles::build(scene);
        let camera_space = tris
            .triangles
            .iter()
            .map(|t| t.positions.map(|p| camera.world_to_camera(p)))
            .collect();
        RaycastReference {
            tris,
            camera: *camera,
            camera_space,
        }
    }

    /// Nearest hit through the center of pixel `(u, v)`. Ties on depth go to
    /// the lower instance ID, then the lower triangle index.
    pub fn cast(&self, u: u32, v: u32) -> HitRecord {
        let dir = self.camera.pixel_ray(u, v);
        let mut best: Option<(f64, u16, usize, f64, f64)> = None;
        for (idx, tri) in self.camera_space.iter().enumerate() {
            let Some((t, b1, b2)) = intersect_triangle(Vec3::ZERO, dir, tri) else {
                continue;
            };
            if !(t > self.camera.near_clip) {
                continue;
            }
            let instance = self.tris.triangles[idx].instance;
            let better = match best {
                None => true,
                Some((bt, bi, bidx, _, _)) => (t, instance, idx) < (bt, bi, bidx),
            };
            if better {
                best = Some((t, instance, idx, b1, b2));
            }
        }
        let Some((t, _, idx, b1, b2)) = best else {
            return HitRecord::MISS;
        };
        let tri = &self.tris.triangles[idx];
        let world_point = self.camera.camera_to_world(dir * t);
        HitRecord {
            hit: true,
            depth: t,
            world_point,
            world_normal: self
                .tris
                .surface_normal(idx, world_point, b1, b2, self.camera.position()),
            instance_id: tri.instance,
            part_index: tri.part,
            semantic_id: tri.semantic,
        }
    }
}

/// One-shot convenience around [`RaycastReference`].
pub fn raycast_reference(scene: &ComposedScene, camera: &CameraModel, pixel: (u32, u32)) -> HitRecord {
    RaycastReference::new(scene, camera).cast(pixel.0, pixel.1)
}
