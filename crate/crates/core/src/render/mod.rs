//! Software rasterizer producing the per-frame G-buffers, and the
//! brute-force ray-cast reference it is tested against.

mod pointcloud;
mod raster;
mod raycast;
mod shading;
mod triangles;

use rayon::prelude::*;

pub use pointcloud::depth_to_pointcloud;
pub use raycast::{raycast_reference, HitRecord, RaycastReference};
pub use shading::{composite_water, shade_surface, to_rgb8, Rgb};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{validate_scene, Background, ComposedScene};
use raster::{visibility, Fragment};
use triangles::{SceneTriangles, SurfaceKind};

const FOAM_COLOR: Rgb = [0.95, 0.96, 0.97];

/// Row-major `width × height` channel set. Depth is camera-z in meters and
/// normals are world-frame; both are zero where nothing was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffers {
    pub width: u32,
    pub height: u32,
    pub color: Vec<[u8; 3]>,
    pub depth: Vec<f32>,
    pub normal: Vec<[f32; 3]>,
    pub instance: Vec<u16>,
    pub semantic: Vec<u16>,
    /// `instance · 256 + part`, zero for background and scenery.
    pub fine_grained: Vec<u16>,
}

impl FrameBuffers {
    /// Background-only buffers.
    pub fn blank(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        FrameBuffers {
            width,
            height,
            color: vec![[0; 3]; n],
            depth: vec![0.0; n],
            normal: vec![[0.0; 3]; n],
            instance: vec![0; n],
            semantic: vec![0; n],
            fine_grained: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Checks channel lengths and the cross-channel ID and depth rules.
    pub fn check_invariants(&self) -> Vec<String> {
        let n = self.len();
        let mut v = Vec::new();
        let lens = [
            self.color.len(),
            self.depth.len(),
            self.normal.len(),
            self.instance.len(),
            self.semantic.len(),
            self.fine_grained.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            v.push(format!("channel lengths {lens:?} do not match {}×{}", self.width, self.height));
            return v;
        }
        for i in 0..n {
            let (x, y) = (i % self.width as usize, i / self.width as usize);
            if self.instance[i] != 0 && !(self.depth[i] > 0.0) {
                v.push(format!("pixel ({x},{y}): instance without depth"));
            }
            if self.fine_grained[i] != 0 && self.fine_grained[i] / 256 != self.instance[i] {
                v.push(format!("pixel ({x},{y}): fine-grained id does not refine instance"));
            }
            if self.depth[i] > 0.0 {
                let [a, b, c] = self.normal[i].map(f64::from);
                let norm = (a * a + b * b + c * c).sqrt();
                if (norm - 1.0).abs() > 1e-6 {
                    v.push(format!("pixel ({x},{y}): normal norm {norm}"));
                }
            }
        }
        v
    }
}

fn background_color(bg: &Background, i: usize, j: usize, w: usize, h: usize) -> Rgb {
    match bg {
        Background::Color(c) => *c,
        Background::Image(tex) => tex
            .sample_nearest((i as f64 + 0.5) / w as f64, (j as f64 + 0.5) / h as f64)
            .map(f64::from),
    }
}

/// Renders `scene` at `width × height`. When that differs from the camera's
/// native size the intrinsics are scaled to match.
pub fn render_frame(scene: &ComposedScene, width: u32, height: u32) -> Result<FrameBuffers> {
    if width == 0 || height == 0 {
        return Err(Error::Domain(format!("resolution {width}×{height} must be at least 1×1")));
    }
    let problems = validate_scene(scene);
    if !problems.is_empty() {
        return Err(Error::InvalidScene(problems));
    }
    let mut camera = scene.camera;
    let k = &mut camera.intrinsics;
    if (k.width, k.height) != (width, height) {
        let (sx, sy) = (width as f64 / k.width as f64, height as f64 / k.height as f64);
        k.fx *= sx;
        k.cx *= sx;
        k.fy *= sy;
        k.cy *= sy;
        k.width = width;
        k.height = height;
    }

    let tris = SceneTriangles::build(scene);
    let opaque = visibility(&tris, &camera, |t| t.kind != SurfaceKind::Water);
    let water = visibility(&tris, &camera, |t| t.kind == SurfaceKind::Water);

    let (w, h) = (width as usize, height as usize);
    let eye = camera.position();
    let mut fb = FrameBuffers::blank(width, height);

    let resolve_hit = |frag: &Fragment, j: usize, i: usize| {
        let idx = frag.triangle as usize;
        let tri = &tris.triangles[idx];
        let ray = camera.pixel_ray(i as u32, j as u32);
        let cam_tri = tri.positions.map(|p| camera.world_to_camera(p));
        let (b1, b2) = raycast::intersect_triangle(Vec3::ZERO, ray, &cam_tri)
            .map(|(_, b1, b2)| (b1, b2))
            .unwrap_or((1.0 / 3.0, 1.0 / 3.0));
        let point = camera.camera_to_world(ray * frag.depth);
        let normal = tris.surface_normal(idx, point, b1, b2, eye);
        (tri, point, normal)
    };

    let rows = fb
        .color
        .par_chunks_mut(w)
        .zip(fb.depth.par_chunks_mut(w))
        .zip(fb.normal.par_chunks_mut(w))
        .zip(fb.instance.par_chunks_mut(w))
        .zip(fb.semantic.par_chunks_mut(w))
        .zip(fb.fine_grained.par_chunks_mut(w))
        .enumerate();
    rows.for_each(|(j, (((((color, depth), normal), instance), semantic), fine))| {
        for i in 0..w {
            let p = j * w + i;
            let surface = opaque[p];
            // Water only counts where it is in front of the opaque surface.
            let wet = water[p].filter(|wf| surface.is_none_or(|s| wf.precedes(&s)));
            let mut under = background_color(&scene.background, i, j, w, h);
            let mut surface_hit = None;
            if let Some(frag) = surface {
                let (tri, point, n) = resolve_hit(&frag, j, i);
                let SurfaceKind::Opaque(mat) = tri.kind else { unreachable!() };
                let view = (eye - point).try_normalized().unwrap_or(n);
                under = shade_surface(&tris.materials[mat], n, &scene.lights, view);
                surface_hit = Some((frag, n));
            }
            let (front, rgb) = match wet {
                Some(frag) => {
                    let (_, point, n) = resolve_hit(&frag, j, i);
                    let params = &scene.water.as_ref().expect("water fragment").params;
                    let m = params.material.clamped();
                    let view = (eye - point).try_normalized().unwrap_or(n);
                    let lit = shade_surface(&m, n, &scene.lights, view);
                    let foam = params.foam_mask(point.x, point.y, scene.time);
                    let surface_rgb: Rgb = std::array::from_fn(|c| lit[c] + (FOAM_COLOR[c] - lit[c]) * foam);
                    (Some((frag, n)), composite_water(surface_rgb, under, m.opacity))
                }
                None => (surface_hit, under),
            };
            color[i] = to_rgb8(rgb);
            if let Some((frag, n)) = front {
                let tri = &tris.triangles[frag.triangle as usize];
                depth[i] = frag.depth as f32;
                normal[i] = n.to_array().map(|c| c as f32);
                instance[i] = tri.instance;
                semantic[i] = tri.semantic;
                fine[i] = if tri.instance == 0 { 0 } else { tri.instance * 256 + tri.part };
            }
        }
    });
    Ok(fb)
}
