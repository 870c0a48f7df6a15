use serde::{Deserialize, Serialize};

use super::labels::{AnnotationRecord, BBox2D};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidTransform, Vec3};
use crate::scene::{CameraModel, Intrinsics};

/// One line per visible instance, `<level> <cx> <cy> <w> <h>` normalized by
/// the image size, pixel centers at `i + 0.5`.
pub fn export_yolo(rec: &AnnotationRecord, width: u32, height: u32) -> String {
    format_yolo(rec.instances.iter().filter_map(|e| e.bbox2d.as_ref()), width, height)
}

/// [`export_yolo`] over bare boxes; the class is each box's `class_id`.
pub fn format_yolo<'a>(boxes: impl IntoIterator<Item = &'a BBox2D>, width: u32, height: u32) -> String {
    let (w, h) = (width as f64, height as f64);
    let mut out = String::new();
    for b in boxes {
        let cx = ((b.x0 + b.x1) as f64 / 2.0 + 0.5) / w;
        let cy = ((b.y0 + b.y1) as f64 / 2.0 + 0.5) / h;
        let bw = (b.x1 - b.x0 + 1) as f64 / w;
        let bh = (b.y1 - b.y0 + 1) as f64 / h;
        out.push_str(&format!("{} {cx:.6} {cy:.6} {bw:.6} {bh:.6}\n", b.class_id));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoloLine {
    pub class: u8,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl YoloLine {
    /// Inclusive pixel bounds `(x0, y0, x1, y1)` in continuous form.
    pub fn pixel_bounds(&self, width: u32, height: u32) -> (f64, f64, f64, f64) {
        let (ww, hh) = (self.w * width as f64, self.h * height as f64);
        let (cx, cy) = (self.cx * width as f64, self.cy * height as f64);
        (cx - ww / 2.0, cy - hh / 2.0, cx + ww / 2.0 - 1.0, cy + hh / 2.0 - 1.0)
    }
}

/// Parses one label line. Each number must be written with exactly six
/// decimals and lie in (0, 1]; the class must be 0..=4.
pub fn parse_yolo_line(line: &str) -> std::result::Result<YoloLine, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    }
    let class: u8 = match fields[0] {
        c @ ("0" | "1" | "2" | "3" | "4") => c.parse().expect("digit"),
        other => return Err(format!("class '{other}' is not 0..4")),
    };
    let mut v = [0.0; 4];
    for (slot, field) in v.iter_mut().zip(&fields[1..]) {
        let well_formed = matches!(field.split_once('.'), Some((int, frac))
            if !int.is_empty() && int.bytes().all(|b| b.is_ascii_digit())
                && frac.len() == 6 && frac.bytes().all(|b| b.is_ascii_digit()));
        if !well_formed {
            return Err(format!("'{field}' is not a six-decimal number"));
        }
        let x: f64 = field.parse().map_err(|_| format!("'{field}' is not a number"))?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(format!("{field} outside (0, 1]"));
        }
        *slot = x;
    }
    Ok(YoloLine { class, cx: v[0], cy: v[1], w: v[2], h: v[3] })
}

/// Parses a whole label file; errors carry the 1-based line number.
pub fn parse_yolo(text: &str) -> std::result::Result<Vec<YoloLine>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let Some(body) = text.strip_suffix('\n') else {
        return Err("file does not end with a newline".into());
    };
    body.split('\n')
        .enumerate()
        .map(|(i, l)| parse_yolo_line(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

/// Camera file contents; field order is the key order on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// `[R | t]` row-major.
    pub extrinsics: [f64; 12],
    /// Camera center in world coordinates.
    pub position: [f64; 3],
}

impl CameraJson {
    pub fn of(cam: &CameraModel) -> Self {
        let k = &cam.intrinsics;
        let (r, t) = (&cam.extrinsics.rotation.0, cam.extrinsics.translation);
        CameraJson {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            extrinsics: [
                r[0][0], r[0][1], r[0][2], t.x, r[1][0], r[1][1], r[1][2], t.y, r[2][0], r[2][1], r[2][2], t.z,
            ],
            position: cam.position().to_array(),
        }
    }

    pub fn to_camera(&self) -> CameraModel {
        let e = &self.extrinsics;
        let rotation = Mat3([[e[0], e[1], e[2]], [e[4], e[5], e[6]], [e[8], e[9], e[10]]]);
        let intrinsics = Intrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
        };
        CameraModel::new(intrinsics, RigidTransform::new(rotation, Vec3::new(e[3], e[7], e[11])))
    }
}

pub fn export_camera(cam: &CameraModel) -> String {
    let mut s = serde_json::to_string_pretty(&CameraJson::of(cam)).expect("plain numbers serialize");
    s.push('\n');
    s
}

pub fn parse_camera(text: &str) -> Result<CameraJson> {
    serde_json::from_str(text).map_err(|e| Error::decode("camera JSON", e.to_string()))
}

fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" { "0.000000".into() } else { s }
}

/// ASCII PLY with float x/y/z vertex properties, six decimals.
pub fn export_pointcloud_ply(points: &[Vec3]) -> String {
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    );
    for p in points {
        out.push_str(&format!("{} {} {}\n", fixed6(p.x), fixed6(p.y), fixed6(p.z)));
    }
    out
}

/// Reads an ASCII PLY whose only element is `vertex` with x, y, z properties.
pub fn parse_pointcloud_ply(text: &str) -> Result<Vec<Vec3>> {
    let bad = |m: String| Error::decode("PLY", m);
    let mut lines = text.lines();
    if lines.next() != Some("ply") || lines.next() != Some("format ascii 1.0") {
        return Err(bad("not an ASCII PLY file".into()));
    }
    let mut count = None;
    let mut props = Vec::new();
    for line in lines.by_ref() {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["end_header"] => break,
            ["comment", ..] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| bad(format!("bad vertex count '{n}'")))?)
            }
            ["property", _, name] => props.push(name.to_string()),
            _ => return Err(bad(format!("unsupported header line '{line}'"))),
        }
    }
    let count = count.ok_or_else(|| bad("missing vertex element".into()))?;
    if props != ["x", "y", "z"] {
        return Err(bad(format!("expected properties x y z, found {props:?}")));
    }
    let points = lines
        .take(count)
        .map(|l| {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|f| f.parse().map_err(|_| bad(format!("bad number '{f}'"))))
                .collect::<Result<_>>()?;
            match v.as_slice() {
                &[x, y, z] => Ok(Vec3::new(x, y, z)),
                _ => Err(bad(format!("expected 3 values in '{l}'"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if points.len() != count {
        return Err(bad(format!("header declares {count} vertices, found {}", points.len())));
    }
    Ok(points)
}
