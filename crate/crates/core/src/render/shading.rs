use crate::geometry::Vec3;
use crate::scene::{LightParams, MaterialParams};

pub type Rgb = [f64; 3];

/// Lambert plus Blinn–Phong. `view_dir` points from the surface toward the
/// eye; each light direction points toward the light. The specular exponent
/// goes from 64 (smooth) to 4 (rough).
pub fn shade_surface(m: &MaterialParams, n: Vec3, lights: &[LightParams], view_dir: Vec3) -> Rgb {
    let exponent = 64.0 + (4.0 - 64.0) * m.roughness;
    let mut ambient = 0.0;
    let mut diffuse = 0.0;
    let mut specular = 0.0;
    for l in lights {
        ambient += l.ambient;
        diffuse += l.intensity * n.dot(l.direction).max(0.0);
        if let Some(h) = (l.direction + view_dir).try_normalized() {
            specular += l.intensity * n.dot(h).max(0.0).powf(exponent);
        }
    }
    m.base_color
        .map(|b| (ambient * b + diffuse * b + m.specular * specular).clamp(0.0, 1.0))
}

/// `opacity·water + (1 − opacity)·under`, componentwise.
pub fn composite_water(water: Rgb, under: Rgb, opacity: f64) -> Rgb {
    std::array::from_fn(|i| opacity * water[i] + (1.0 - opacity) * under[i])
}

pub fn to_rgb8(c: Rgb) -> [u8; 3] {
    c.map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
}
