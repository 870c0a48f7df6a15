//! Z-buffered scanline-free rasterization: each triangle is clipped to the
//! near plane, projected, and tested against pixel centers with edge
//! functions. Depth comes from intersecting the pixel ray with the
//! triangle's plane, so it is exact camera-z rather than interpolated.
//!
//! Rows are processed in bands in parallel. Every pixel keeps the fragment
//! with the smallest `(depth, instance, triangle index)` key, which is a
//! total order, so the result does not depend on scheduling.

use rayon::prelude::*;

use super::triangles::{SceneTriangles, WorldTriangle};
use crate::geometry::Vec3;
use crate::scene::CameraModel;

const BAND_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Fragment {
    pub depth: f64,
    pub instance: u16,
    pub triangle: u32,
}

impl Fragment {
    pub fn precedes(&self, other: &Fragment) -> bool {
        (self.depth, self.instance, self.triangle) < (other.depth, other.instance, other.triangle)
    }
}

struct Prepared {
    triangle: u32,
    instance: u16,
    plane_normal: Vec3,
    plane_offset: f64,
    /// Screen-space polygon with positive signed area.
    polygon: Vec<(f64, f64)>,
    cols: (usize, usize),
    rows: (usize, usize),
}

fn clip_near(poly: &[Vec3], near: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (k, &a) in poly.iter().enumerate() {
        let b = poly[(k + 1) % poly.len()];
        let (ain, bin) = (a.z >= near, b.z >= near);
        if ain {
            out.push(a);
        }
        if ain != bin {
            let s = (near - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * s;
            p.z = near;
            out.push(p);
        }
    }
    out
}

fn prepare(
    index: usize,
    tri: &WorldTriangle,
    camera: &CameraModel,
) -> Option<Prepared> {
    let k = &camera.intrinsics;
    let c = tri.positions.map(|p| camera.world_to_camera(p));
    let plane_normal = (c[1] - c[0]).cross(c[2] - c[0]);
    if plane_normal.norm() == 0.0 {
        return None;
    }
    let clipped = clip_near(&c, camera.near_clip);
    if clipped.len() < 3 {
        return None;
    }
    let mut polygon: Vec<(f64, f64)> = clipped
        .iter()
        .map(|p| (k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy))
        .collect();
    let area: f64 = (0..polygon.len())
        .map(|i| {
            let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    if !(area.abs() > 0.0) || !area.is_finite() {
        return None;
    }
    if area < 0.0 {
        polygon.reverse();
    }
    let (mut umin, mut umax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(u, v) in &polygon {
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    // Pixel i is sampled at i + 0.5.
    let span = |lo: f64, hi: f64, n: u32| -> Option<(usize, usize)> {
        let first = (lo - 0.5).ceil().max(0.0);
        let last = (hi - 0.5).floor().min(n as f64 - 1.0);
        (first <= last).then_some((first as usize, last as usize))
    };
    let cols = span(umin, umax, k.width)?;
    let rows = span(vmin, vmax, k.height)?;
    Some(Prepared {
        triangle: index as u32,
        instance: tri.instance,
        plane_offset: plane_normal.dot(c[0]),
        plane_normal,
        polygon,
        cols,
        rows,
    })
}

fn covers(polygon: &[(f64, f64)], pu: f64, pv: f64) -> bool {
    let n = polygon.len();
    (0..n).all(|k| {
        let (a, b) = (polygon[k], polygon[(k + 1) % n]);
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let e = dx * (pv - a.1) - dy * (pu - a.0);
        // Top-left fill rule for ties.
        e > 0.0 || (e == 0.0 && ((dy == 0.0 && dx > 0.0) || dy < 0.0))
    })
}

/// Nearest fragment per pixel (row-major) over triangles accepted by `keep`.
pub(crate) fn visibility<F>(tris: &SceneTriangles, camera: &CameraModel, keep: F) -> Vec<Option<Fragment>>
where
    F: Fn(&WorldTriangle) -> bool + Sync,
{
    let (w, h) = (camera.width() as usize, camera.height() as usize);
    let prepared: Vec<Prepared> = tris
        .triangles
        .par_iter()
        .enumerate()
        .filter(|(_, t)| keep(t))
        .filter_map(|(i, t)| prepare(i, t, camera))
        .collect();

    let rays: Vec<Vec3> = (0..h)
        .flat_map(|j| (0..w).map(move |i| (i as u32, j as u32)))
        .map(|(i, j)| camera.pixel_ray(i, j))
        .collect();

    let mut buffer: Vec<Option<Fragment>> = vec![None; w * h];
    buffer
        .par_chunks_mut(w * BAND_ROWS)
        .enumerate()
        .for_each(|(band, chunk)| {
            let row0 = band * BAND_ROWS;
            let row1 = row0 + chunk.len() / w;
            for p in &prepared {
                if p.rows.1 < row0 || p.rows.0 >= row1 {
                    continue;
                }
                for j in p.rows.0.max(row0)..=p.rows.1.min(row1 - 1) {
                    for i in p.cols.0..=p.cols.1 {
                        if !covers(&p.polygon, i as f64 + 0.5, j as f64 + 0.5) {
                            continue;
                        }
                        let denom = p.plane_normal.dot(rays[j * w + i]);
                        let depth = p.plane_offset / denom;
                        if !(depth > camera.near_clip) || !depth.is_finite() {
                            continue;
                        }
                        let frag = Fragment {
                            depth,
                            instance: p.instance,
                            triangle: p.triangle,
                        };
                        let slot = &mut chunk[(j - row0) * w + i];
                        if slot.is_none_or(|cur| frag.precedes(&cur)) {
                            *slot = Some(frag);
                        }
                    }
                }
            }
        });
    buffer
}
