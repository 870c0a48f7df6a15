use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flood::{FloodLevelTable, WaterSurfaceParams, WaveComponent, DEFAULT_GRAVITY};
use crate::procgen::{LayoutParams, RandomizationRanges};
use crate::scene::{MaterialParams, SemanticClass, MAX_INSTANCE_ID};

/// Keys that must be present in every config document.
pub const REQUIRED_KEYS: [&str; 3] = ["resolution", "master_seed", "output_dir"];

/// Image size, written as `[width, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl From<[u32; 2]> for Resolution {
    fn from([width, height]: [u32; 2]) -> Self {
        Resolution { width, height }
    }
}

impl From<Resolution> for [u32; 2] {
    fn from(r: Resolution) -> Self {
        [r.width, r.height]
    }
}

/// Frame quota per flood level, written as `{"0": n0, …, "4": n4}`. Levels
/// missing from the map get no frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FramesPerLevel(pub [u64; 5]);

impl FramesPerLevel {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl Default for FramesPerLevel {
    fn default() -> Self {
        FramesPerLevel([1; 5])
    }
}

impl Serialize for FramesPerLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, u64> = self.0.iter().enumerate().map(|(l, &n)| (l.to_string(), n)).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FramesPerLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map = BTreeMap::<String, i64>::deserialize(d)?;
        let mut counts = [0; 5];
        for (key, n) in map {
            let level: usize = match key.as_str() {
                "0" | "1" | "2" | "3" | "4" => key.parse().expect("digit"),
                _ => return Err(D::Error::custom(format!("frames_per_level key '{key}' is not a level 0..4"))),
            };
            if n < 0 {
                return Err(D::Error::custom(format!("frames_per_level[{level}] = {n} must be >= 0")));
            }
            counts[level] = n as u64;
        }
        Ok(FramesPerLevel(counts))
    }
}

/// An OBJ mesh and the class and height it is normalized to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub path: PathBuf,
    #[serde(default = "car_class")]
    pub class: SemanticClass,
    pub canonical_height: f64,
}

fn car_class() -> SemanticClass {
    SemanticClass::Car
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundSpec {
    Color([f64; 3]),
    /// PNG stretched over the frame.
    Image(PathBuf),
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec::Color([0.62, 0.72, 0.85])
    }
}

/// Water appearance and waves shared by every flooded frame. The still-water
/// level comes from the frame's flood level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaterTemplate {
    pub waves: Vec<WaveComponent>,
    pub gravity: f64,
    pub foam_threshold: f64,
    pub roughness_noise_amp: f64,
    pub material: MaterialParams,
    /// PNG whose luminance perturbs the normals; procedural noise when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavy_texture: Option<PathBuf>,
    /// Meters covered by one repetition of `wavy_texture`.
    pub wavy_tile_size: f64,
    /// Cells per side of the water mesh.
    pub grid_resolution: u32,
    /// Meters the water patch extends beyond the layout.
    pub margin: f64,
}

impl Default for WaterTemplate {
    fn default() -> Self {
        let p = WaterSurfaceParams::default();
        WaterTemplate {
            waves: p.waves,
            gravity: DEFAULT_GRAVITY,
            foam_threshold: p.foam_threshold,
            roughness_noise_amp: p.roughness_noise_amp,
            material: p.material,
            wavy_texture: None,
            wavy_tile_size: 4.0,
            grid_resolution: 128,
            margin: 20.0,
        }
    }
}

/// Everything needed to generate a dataset. Serializes to the config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub resolution: Resolution,
    pub master_seed: u64,
    /// Omitted from the manifest snapshot so that runs into different
    /// directories produce identical manifests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub frames_per_level: FramesPerLevel,
    pub cars_per_frame: u32,
    /// Visible-pixel threshold below which a car gets no 2D box.
    pub min_pixels: u64,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub layout: LayoutParams,
    /// Ingested layout; replaces the generated grid city when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_file: Option<PathBuf>,
    /// Empty means the built-in procedural car.
    pub assets: Vec<AssetSpec>,
    pub randomization: RandomizationRanges,
    pub flood_table: FloodLevelTable,
    pub water: WaterTemplate,
    /// Key light elevation above the horizon, degrees.
    pub light_elevation_deg: f64,
    pub ambient: f64,
    pub background: BackgroundSpec,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            resolution: Resolution { width: 512, height: 512 },
            master_seed: 0,
            output_dir: None,
            frames_per_level: FramesPerLevel::default(),
            cars_per_frame: 3,
            min_pixels: 25,
            fov_deg: 60.0,
            layout: LayoutParams::default(),
            layout_file: None,
            assets: Vec::new(),
            randomization: RandomizationRanges::default(),
            flood_table: FloodLevelTable::default(),
            water: WaterTemplate::default(),
            light_elevation_deg: 50.0,
            ambient: 0.25,
            background: BackgroundSpec::default(),
        }
    }
}

/// A parsed config plus any warnings (unknown keys).
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: GenerationConfig,
    pub warnings: Vec<String>,
}

/// Parses and validates a JSON config. Relative paths are resolved against
/// the current directory when checking that referenced files exist.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
    let Some(object) = value.as_object() else {
        return Err(Error::Config("config must be a JSON object".into()));
    };
    let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !object.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing required key(s): {}", missing.join(", "))));
    }
    let mut warnings = Vec::new();
    let config: GenerationConfig = serde_ignored::deserialize(value, |path| {
        warnings.push(format!("unknown key {path}"));
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    let problems = config.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    Ok(ParsedConfig { config, warnings })
}

impl GenerationConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<ParsedConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        parse_config(&text)
    }

    /// Every violated invariant, including referenced files that do not exist.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.resolution.width == 0 || self.resolution.height == 0 {
            v.push(format!(
                "resolution {}×{} must be at least 1×1",
                self.resolution.width, self.resolution.height
            ));
        }
        if self.output_dir.as_ref().is_some_and(|d| d.as_os_str().is_empty()) {
            v.push("output_dir is empty".into());
        }
        if self.cars_per_frame >= MAX_INSTANCE_ID as u32 {
            v.push(format!("cars_per_frame {} must be below {MAX_INSTANCE_ID}", self.cars_per_frame));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            v.push(format!("fov_deg {} outside (0, 180)", self.fov_deg));
        }
        if !(self.light_elevation_deg > 0.0 && self.light_elevation_deg <= 90.0) {
            v.push(format!("light_elevation_deg {} outside (0, 90]", self.light_elevation_deg));
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            v.push(format!("ambient {} outside [0, 1]", self.ambient));
        }
        if self.layout_file.is_none() {
            v.extend(self.layout.validate().into_iter().map(|m| format!("layout: {m}")));
        }
        v.extend(self.randomization.validate().into_iter().map(|m| format!("randomization: {m}")));
        v.extend(self.flood_table.validate().into_iter().map(|m| format!("flood_table: {m}")));
        let w = &self.water;
        let probe = WaterSurfaceParams {
            waves: w.waves.clone(),
            gravity: w.gravity,
            foam_threshold: w.foam_threshold,
            roughness_noise_amp: w.roughness_noise_amp,
            material: w.material.clone(),
            ..WaterSurfaceParams::default()
        };
        v.extend(probe.validate());
        if w.grid_resolution == 0 {
            v.push("water grid_resolution must be >= 1".into());
        }
        if !(w.margin >= 0.0 && w.margin.is_finite()) {
            v.push(format!("water margin {} must be >= 0", w.margin));
        }
        if !(w.wavy_tile_size > 0.0) {
            v.push(format!("water wavy_tile_size {} must be > 0", w.wavy_tile_size));
        }
        for (i, a) in self.assets.iter().enumerate() {
            if !(a.canonical_height > 0.0) {
                v.push(format!("asset {i}: canonical_height {} must be > 0", a.canonical_height));
            }
            if a.class == SemanticClass::Flood {
                v.push(format!("asset {i}: the flood class is reserved for water"));
            }
        }
        if !self.assets.is_empty() && !self.assets.iter().any(|a| a.class == SemanticClass::Car) {
            v.push("assets must include at least one car".into());
        }
        for path in self.referenced_files() {
            if !path.is_file() {
                v.push(format!("referenced file {} does not exist", path.display()));
            }
        }
        v
    }

    /// Files the config points at, in declaration order.
    pub fn referenced_files(&self) -> Vec<&Path> {
        let mut files: Vec<&Path> = self.assets.iter().map(|a| a.path.as_path()).collect();
        files.extend(self.layout_file.as_deref());
        files.extend(self.water.wavy_texture.as_deref());
        if let BackgroundSpec::Image(p) = &self.background {
            files.push(p);
        }
        files
    }

    /// Copy stored in the manifest.
    pub fn snapshot(&self) -> GenerationConfig {
        GenerationConfig { output_dir: None, ..self.clone() }
    }
}
