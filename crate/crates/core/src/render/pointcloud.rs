use crate::geometry::Vec3;
use crate::scene::Intrinsics;

/// Back-projects every pixel with positive depth into the camera frame,
/// in row-major pixel order. `depth` is camera-z, row-major `width × height`.
pub fn depth_to_pointcloud(depth: &[f32], k: &Intrinsics) -> Vec<Vec3> {
    let w = k.width as usize;
    depth
        .iter()
        .enumerate()
        .filter(|(_, &z)| z > 0.0)
        .map(|(idx, &z)| {
            let z = f64::from(z);
            let (u, v) = ((idx % w) as f64 + 0.5, (idx / w) as f64 + 0.5);
            Vec3::new((u - k.cx) / k.fx * z, (v - k.cy) / k.fy * z, z)
        })
        .collect()
}
