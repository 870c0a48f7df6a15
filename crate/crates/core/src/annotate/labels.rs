use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flood::{flood_level_label, submersion_ratio, FloodLevelTable};
use crate::geometry::{RigidTransform, Vec3};
use crate::render::FrameBuffers;
use crate::scene::{CameraModel, ComposedScene, Intrinsics, ObjectInstance, SemanticClass};

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    /// Detection class, the instance's flood level.
    pub class_id: u8,
    pub instance_id: u16,
}

impl BBox2D {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox3D {
    /// Object-space box corners under the instance pose (bit 0 = x, bit 1 = y,
    /// bit 2 = z selects max over min).
    pub corners: [Vec3; 8],
    pub camera_corners: [Vec3; 8],
    pub center: Vec3,
    /// Full side lengths along the object axes.
    pub extents: Vec3,
    /// Heading about world z, radians.
    pub yaw: f64,
    pub instance_id: u16,
}

/// Tight box around pixels equal to `id` in a row-major ID image, or `None`
/// when fewer than `min_pixels` match. `class_id` is left at 0.
pub fn bbox2d_from_instance_mask(ids: &[u16], width: u32, id: u16, min_pixels: u64) -> Option<BBox2D> {
    let w = width as usize;
    let mut count = 0u64;
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for (p, _) in ids.iter().enumerate().filter(|(_, &v)| v == id) {
        let (x, y) = ((p % w) as u32, (p / w) as u32);
        count += 1;
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    (count > 0 && count >= min_pixels).then_some(BBox2D { x0, y0, x1, y1, class_id: 0, instance_id: id })
}

pub fn bbox3d_of_instance(inst: &ObjectInstance, cam: &CameraModel) -> BBox3D {
    let object = inst.mesh.object_aabb();
    let corners = object.corners().map(|c| inst.pose.apply(c));
    BBox3D {
        camera_corners: corners.map(|c| cam.world_to_camera(c)),
        corners,
        center: inst.pose.apply(object.center()),
        extents: object.size(),
        yaw: inst.pose.yaw(),
        instance_id: inst.instance_id,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub intrinsics: Intrinsics,
    pub extrinsics: RigidTransform,
    pub position: Vec3,
}

impl CameraRecord {
    pub fn of(cam: &CameraModel) -> Self {
        CameraRecord {
            intrinsics: cam.intrinsics,
            extrinsics: cam.extrinsics,
            position: cam.position(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLabel {
    pub instance_id: u16,
    pub semantic_class: SemanticClass,
    pub flood_level: u8,
    pub submersion_ratio: f64,
    /// Absent when fewer than the minimum number of pixels are visible.
    pub bbox2d: Option<BBox2D>,
    pub bbox3d: BBox3D,
    pub pixel_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub frame_id: u64,
    pub seed: u64,
    pub camera: CameraRecord,
    pub scene_flood_level: u8,
    pub instances: Vec<InstanceLabel>,
}

/// Labels every car in `scene` from buffers rendered at the camera's
/// resolution. `frame_id` and `seed` are left at 0 for the caller to fill.
pub fn build_annotation_record(
    scene: &ComposedScene,
    fb: &FrameBuffers,
    min_pixels: u64,
    table: &FloodLevelTable,
) -> Result<AnnotationRecord> {
    let cam = &scene.camera;
    if (fb.width, fb.height) != (cam.width(), cam.height()) {
        return Err(Error::Consistency(format!(
            "buffers are {}×{} but the camera is {}×{}",
            fb.width,
            fb.height,
            cam.width(),
            cam.height()
        )));
    }
    if fb.instance.len() != fb.len() {
        return Err(Error::Consistency("instance buffer length does not match its size".into()));
    }
    let mut counts = vec![0u64; 1 << 16];
    for &id in &fb.instance {
        counts[id as usize] += 1;
    }
    if let Some(id) = (1..counts.len()).find(|&id| counts[id] > 0 && scene.semantic_of_instance(id as u16).is_none()) {
        return Err(Error::Consistency(format!("instance buffer contains unknown id {id}")));
    }

    let base = scene.water.as_ref().map(|w| w.params.base_level);
    let instances = scene
        .cars()
        .map(|inst| {
            let ratio = match base {
                Some(level) => submersion_ratio(&inst.world_aabb(), level)?,
                None => 0.0,
            };
            let flood_level = flood_level_label(base.is_some(), ratio, table)?;
            let bbox2d = bbox2d_from_instance_mask(&fb.instance, fb.width, inst.instance_id, min_pixels)
                .map(|b| BBox2D { class_id: flood_level, ..b });
            Ok(InstanceLabel {
                instance_id: inst.instance_id,
                semantic_class: inst.semantic_class,
                flood_level,
                submersion_ratio: ratio,
                bbox2d,
                bbox3d: bbox3d_of_instance(inst, cam),
                pixel_count: counts[inst.instance_id as usize],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotationRecord {
        frame_id: 0,
        seed: 0,
        camera: CameraRecord::of(cam),
        scene_flood_level: scene.water.as_ref().map_or(0, |w| w.params.level_class),
        instances,
    })
}
