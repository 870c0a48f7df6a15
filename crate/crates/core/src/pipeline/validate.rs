use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::manifest::{DatasetManifest, ManifestEntry, MANIFEST_FILE};
use crate::annotate::{bbox2d_from_instance_mask, decode_pgm16, parse_yolo};
use crate::error::Result;
use crate::flood::{flood_level_label, FloodLevelTable};

/// Frames whose boxes are re-derived from the instance image; the rest get
/// the cheaper checks only.
pub const TIGHTNESS_SAMPLE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    FrameCount,
    MissingFile,
    Unreadable,
    YoloGrammar,
    BboxOutsideImage,
    LabelCoherence,
    Refinement,
    Tightness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub frame_id: Option<u64>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame_id {
            Some(id) => write!(f, "frame {id}: {:?}: {}", self.kind, self.message),
            None => write!(f, "dataset: {:?}: {}", self.kind, self.message),
        }
    }
}

/// Empty `violations` means the dataset passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaReport {
    pub frames_checked: usize,
    pub tightness_checked: usize,
    pub violations: Vec<Violation>,
}

impl QaReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

struct FrameCheck<'a> {
    dir: &'a Path,
    entry: &'a ManifestEntry,
    width: u32,
    height: u32,
    table: &'a FloodLevelTable,
    tightness: bool,
    out: Vec<Violation>,
}

impl FrameCheck<'_> {
    fn push(&mut self, kind: ViolationKind, message: String) {
        self.out.push(Violation { frame_id: Some(self.entry.frame_id), kind, message });
    }

    fn read(&mut self, name: &str) -> Option<Vec<u8>> {
        match std::fs::read(self.dir.join(name)) {
            Ok(b) => Some(b),
            Err(e) => {
                self.push(ViolationKind::Unreadable, format!("{name}: {e}"));
                None
            }
        }
    }

    fn ids(&mut self, name: &str) -> Option<Vec<u16>> {
        let bytes = self.read(name)?;
        match decode_pgm16(&bytes) {
            Ok((w, h, ids)) if (w, h) == (self.width, self.height) => Some(ids),
            Ok((w, h, _)) => {
                self.push(ViolationKind::Unreadable, format!("{name} is {w}×{h}, expected {}×{}", self.width, self.height));
                None
            }
            Err(e) => {
                self.push(ViolationKind::Unreadable, format!("{name}: {e}"));
                None
            }
        }
    }

    fn run(mut self) -> Vec<Violation> {
        let e = self.entry;
        let missing: Vec<String> = e.files.all().iter().filter(|n| !self.dir.join(n).is_file()).map(|n| n.to_string()).collect();
        for name in missing {
            self.push(ViolationKind::MissingFile, name);
        }
        self.check_labels();
        self.check_yolo();
        self.check_segmentation();
        self.out
    }

    fn check_labels(&mut self) {
        let e = self.entry;
        if e.scene_flood_level > 4 {
            self.push(ViolationKind::LabelCoherence, format!("scene level {} outside 0..4", e.scene_flood_level));
        }
        let flooded = e.scene_flood_level > 0;
        for inst in &e.instances {
            match flood_level_label(flooded, inst.submersion_ratio, self.table) {
                Ok(l) if l == inst.flood_level => {}
                Ok(l) => self.push(
                    ViolationKind::LabelCoherence,
                    format!(
                        "instance {}: level {} but ratio {} labels as {l}",
                        inst.instance_id, inst.flood_level, inst.submersion_ratio
                    ),
                ),
                Err(err) => self.push(ViolationKind::LabelCoherence, format!("instance {}: {err}", inst.instance_id)),
            }
            if let Some(b) = inst.bbox2d {
                if b.class_id != inst.flood_level {
                    self.push(ViolationKind::LabelCoherence, format!("instance {}: box class {} differs from level {}", inst.instance_id, b.class_id, inst.flood_level));
                }
                if !(b.x0 <= b.x1 && b.y0 <= b.y1 && b.x1 < self.width && b.y1 < self.height) {
                    self.push(ViolationKind::BboxOutsideImage, format!("instance {}: box {:?}", inst.instance_id, (b.x0, b.y0, b.x1, b.y1)));
                }
            }
        }
    }

    fn check_yolo(&mut self) {
        let name = self.entry.files.yolo.clone();
        let Some(bytes) = self.read(&name) else { return };
        let text = String::from_utf8_lossy(&bytes);
        let lines = match parse_yolo(&text) {
            Ok(l) => l,
            Err(msg) => {
                self.push(ViolationKind::YoloGrammar, format!("{name}: {msg}"));
                return;
            }
        };
        let boxes: Vec<_> = self.entry.instances.iter().filter_map(|i| i.bbox2d).collect();
        if lines.len() != boxes.len() {
            self.push(ViolationKind::LabelCoherence, format!("{name}: {} lines for {} labeled instances", lines.len(), boxes.len()));
            return;
        }
        let (w, h) = (self.width as f64, self.height as f64);
        for (k, (line, b)) in lines.iter().zip(boxes).enumerate() {
            let (x0, y0, x1, y1) = line.pixel_bounds(self.width, self.height);
            if x0 < -0.5 || y0 < -0.5 || x1 > w - 0.5 || y1 > h - 0.5 {
                self.push(ViolationKind::BboxOutsideImage, format!("{name} line {}: box leaves the image", k + 1));
            }
            let off = [(x0, b.x0), (y0, b.y0), (x1, b.x1), (y1, b.y1)].iter().any(|&(got, want)| (got - want as f64).abs() > 0.5);
            if off || line.class != b.class_id {
                self.push(ViolationKind::LabelCoherence, format!("{name} line {}: does not match instance {}", k + 1, b.instance_id));
            }
        }
    }

    fn check_segmentation(&mut self) {
        let files = self.entry.files.clone();
        let (Some(inst), Some(fine)) = (self.ids(&files.instance), self.ids(&files.fine_grained)) else { return };
        let bad = inst
            .iter()
            .zip(&fine)
            .position(|(&i, &f)| (f == 0) != (i == 0) || (f != 0 && f / 256 != i));
        if let Some(p) = bad {
            let (x, y) = (p as u32 % self.width, p as u32 / self.width);
            self.push(ViolationKind::Refinement, format!("pixel ({x},{y}): instance {} vs fine {}", inst[p], fine[p]));
        }
        if !self.tightness {
            return;
        }
        for label in &self.entry.instances {
            let count = inst.iter().filter(|&&i| i == label.instance_id).count() as u64;
            let derived = bbox2d_from_instance_mask(&inst, self.width, label.instance_id, 1);
            let stored = label.bbox2d.map(|b| (b.x0, b.y0, b.x1, b.y1));
            let boxes_agree = match stored {
                Some(s) => derived.map(|b| (b.x0, b.y0, b.x1, b.y1)) == Some(s),
                None => true,
            };
            if count != label.pixel_count || !boxes_agree {
                self.push(
                    ViolationKind::Tightness,
                    format!(
                        "instance {}: stored box {stored:?} / {} px, image gives {:?} / {count} px",
                        label.instance_id,
                        label.pixel_count,
                        derived.map(|b| (b.x0, b.y0, b.x1, b.y1))
                    ),
                );
            }
        }
    }
}

/// Checks a generated dataset directory against its manifest.
pub fn validate_dataset(dir: &Path) -> Result<QaReport> {
    let manifest = DatasetManifest::load(&dir.join(MANIFEST_FILE))?;
    let cfg = &manifest.config;
    let mut violations = Vec::new();
    let expected = cfg.frames_per_level.total();
    if manifest.frames.len() as u64 != expected {
        violations.push(Violation {
            frame_id: None,
            kind: ViolationKind::FrameCount,
            message: format!("{} frames listed, config asks for {expected}", manifest.frames.len()),
        });
    }
    if let Some((k, f)) = manifest.frames.iter().enumerate().find(|(k, f)| f.frame_id != *k as u64) {
        violations.push(Violation {
            frame_id: Some(f.frame_id),
            kind: ViolationKind::FrameCount,
            message: format!("entry {k} has frame_id {}", f.frame_id),
        });
    }
    let stride = manifest.frames.len().div_ceil(TIGHTNESS_SAMPLE).max(1);
    let per_frame: Vec<Vec<Violation>> = manifest
        .frames
        .par_iter()
        .enumerate()
        .map(|(k, entry)| {
            FrameCheck {
                dir,
                entry,
                width: cfg.resolution.width,
                height: cfg.resolution.height,
                table: &cfg.flood_table,
                tightness: k % stride == 0,
                out: Vec::new(),
            }
            .run()
        })
        .collect();
    violations.extend(per_frame.into_iter().flatten());
    Ok(QaReport {
        frames_checked: manifest.frames.len(),
        tightness_checked: manifest.frames.len().div_ceil(stride),
        violations,
    })
}
