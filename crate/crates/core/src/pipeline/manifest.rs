use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::GenerationConfig;
use crate::annotate::InstanceLabel;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
/// Present in the output directory while generation runs, and left behind
/// (with the failure cause) when it aborts.
pub const PARTIAL_MARKER: &str = ".partial";

/// File names of one frame, relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFiles {
    pub color: String,
    pub depth: String,
    pub normal: String,
    pub instance: String,
    pub semantic: String,
    pub fine_grained: String,
    pub pointcloud: String,
    pub yolo: String,
    pub camera: String,
}

impl FrameFiles {
    pub fn for_frame(frame_id: u64) -> Self {
        let stem = format!("frame_{frame_id:06}");
        let f = |suffix: &str| format!("{stem}.{suffix}");
        FrameFiles {
            color: f("png"),
            depth: f("depth.pfm"),
            normal: f("normal.pfm"),
            instance: f("inst.pgm"),
            semantic: f("sem.pgm"),
            fine_grained: f("fine.pgm"),
            pointcloud: f("ply"),
            yolo: f("txt"),
            camera: f("camera.json"),
        }
    }

    pub fn all(&self) -> [&str; 9] {
        [
            &self.color,
            &self.depth,
            &self.normal,
            &self.instance,
            &self.semantic,
            &self.fine_grained,
            &self.pointcloud,
            &self.yolo,
            &self.camera,
        ]
    }

    /// Name stored for an encoded channel suffix such as `inst.pgm`.
    pub fn for_suffix(&self, suffix: &str) -> Option<&str> {
        self.all().into_iter().find(|name| name.split_once('.').is_some_and(|(_, s)| s == suffix))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub frame_id: u64,
    pub seed: u64,
    pub scene_flood_level: u8,
    pub files: FrameFiles,
    pub instances: Vec<InstanceLabel>,
    /// Non-fatal events such as placement saturation or clamped jitter.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelCounts {
    pub image_count: u64,
    pub instance_count: u64,
}

/// Images and labeled instances per flood level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsTable {
    pub levels: [LevelCounts; 5],
    pub total_images: u64,
    pub total_instances: u64,
    pub flooded_images: u64,
    pub flooded_instances: u64,
}

impl StatsTable {
    pub fn from_levels(levels: [LevelCounts; 5]) -> Self {
        let sum = |f: fn(&LevelCounts) -> u64, from: usize| levels[from..].iter().map(f).sum();
        StatsTable {
            levels,
            total_images: sum(|l| l.image_count, 0),
            total_instances: sum(|l| l.instance_count, 0),
            flooded_images: sum(|l| l.image_count, 1),
            flooded_instances: sum(|l| l.instance_count, 1),
        }
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<[String; 3]> = vec![["level".into(), "images".into(), "instances".into()]];
        for (l, c) in self.levels.iter().enumerate() {
            rows.push([l.to_string(), c.image_count.to_string(), c.instance_count.to_string()]);
        }
        rows.push(["flooded".into(), self.flooded_images.to_string(), self.flooded_instances.to_string()]);
        rows.push(["total".into(), self.total_images.to_string(), self.total_instances.to_string()]);
        let widths: Vec<usize> = (0..3).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            out.push_str(&format!("{:<w0$}  {:>w1$}  {:>w2$}\n", r[0], r[1], r[2], w0 = widths[0], w1 = widths[1], w2 = widths[2]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: GenerationConfig,
    pub frames: Vec<ManifestEntry>,
    pub stats: StatsTable,
    /// Storage conventions of the output files.
    pub conventions: Conventions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub depth: String,
    pub normal: String,
    pub ids: String,
    pub yolo_class: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            depth: "camera-z meters, f32 PFM, 0 = no hit".into(),
            normal: "world-frame unit vectors, f32 PFM, 0 = no hit".into(),
            ids: "16-bit PGM; fine = instance*256 + part".into(),
            yolo_class: "flood level 0..4".into(),
        }
    }
}

impl DatasetManifest {
    pub fn new(config: &GenerationConfig, frames: Vec<ManifestEntry>) -> Self {
        let mut m = DatasetManifest {
            config: config.snapshot(),
            frames,
            stats: StatsTable::default(),
            conventions: Conventions::default(),
        };
        m.stats = dataset_stats(&m);
        m
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::decode("manifest", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

/// Images are counted by the frame's flood level; instances are labeled
/// (boxed) cars counted by their own flood level.
pub fn dataset_stats(m: &DatasetManifest) -> StatsTable {
    let mut levels = [LevelCounts::default(); 5];
    for f in &m.frames {
        if let Some(l) = levels.get_mut(f.scene_flood_level as usize) {
            l.image_count += 1;
        }
        for e in f.instances.iter().filter(|e| e.bbox2d.is_some()) {
            if let Some(l) = levels.get_mut(e.flood_level as usize) {
                l.instance_count += 1;
            }
        }
    }
    StatsTable::from_levels(levels)
}
