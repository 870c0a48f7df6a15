use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{BackgroundSpec, GenerationConfig};
use super::manifest::{DatasetManifest, FrameFiles, ManifestEntry, MANIFEST_FILE, PARTIAL_MARKER};
use crate::annotate::{
    build_annotation_record, encode_buffers, export_camera, export_pointcloud_ply, export_yolo, AnnotationRecord,
};
use crate::error::{Error, Result};
use crate::flood::{level_to_water_height, WaterSurfaceParams, WavyTexture};
use crate::geometry::{Rect, Vec3};
use crate::mesh::{box_mesh, load_mesh_obj, TriangleMesh};
use crate::procgen::{
    derive_frame_seed, generate_layout, place_objects, randomize_scene, splitmix64, AssetCatalog, RngStream,
    SeedSpec, UrbanLayout,
};
use crate::render::{depth_to_pointcloud, render_frame, FrameBuffers};
use crate::scene::{
    Background, CameraModel, ComposedScene, Intrinsics, LightParams, MaterialParams, Scenery, SceneryClass,
    WaterLayer, MAX_INSTANCE_ID,
};
use crate::texture::Texture;

/// Instance ID of the water surface in every flooded frame.
pub const WATER_INSTANCE_ID: u16 = MAX_INSTANCE_ID;

/// Camera draws rejected for starting inside a building before giving up.
const CAMERA_REDRAWS: usize = 16;

/// External files a config refers to, loaded once per run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub catalog: AssetCatalog,
    pub layout: Option<UrbanLayout>,
    pub background: Background,
    pub wavy_texture: WavyTexture,
}

impl Resources {
    pub fn load(cfg: &GenerationConfig) -> Result<Self> {
        let catalog = if cfg.assets.is_empty() {
            AssetCatalog::builtin(cfg.flood_table.reference_height)
        } else {
            let mut entries = Vec::new();
            for a in &cfg.assets {
                let file = fs::File::open(&a.path)
                    .map_err(|e| Error::io(format!("opening asset {}", a.path.display()), e))?;
                let mesh = load_mesh_obj(std::io::BufReader::new(file))
                    .map_err(|e| Error::Config(format!("asset {}: {e}", a.path.display())))?;
                entries.push((mesh, a.class, a.canonical_height));
            }
            AssetCatalog::new(entries)?
        };
        let layout = cfg.layout_file.as_deref().map(UrbanLayout::load).transpose()?;
        let background = match &cfg.background {
            BackgroundSpec::Color(c) => Background::Color(*c),
            BackgroundSpec::Image(p) => Background::Image(Arc::new(Texture::load_png(p)?)),
        };
        let wavy_texture = match &cfg.water.wavy_texture {
            None => WavyTexture::Procedural,
            Some(p) => WavyTexture::Image {
                texture: Arc::new(Texture::load_png(p)?),
                tile_size: cfg.water.wavy_tile_size,
            },
        };
        Ok(Resources { catalog, layout, background, wavy_texture })
    }
}

/// Frame IDs and their flood levels: level 0 frames first, then level 1, …
pub fn frame_plan(cfg: &GenerationConfig) -> Vec<(u64, u8)> {
    let mut plan = Vec::new();
    for (level, &n) in cfg.frames_per_level.0.iter().enumerate() {
        for _ in 0..n {
            plan.push((plan.len() as u64, level as u8));
        }
    }
    plan
}

/// A fully randomized frame scene.
#[derive(Debug, Clone)]
pub struct FrameScene {
    pub scene: ComposedScene,
    pub seed: u64,
    pub notices: Vec<String>,
}

fn flat_quads(rects: &[Rect], z: f64) -> Option<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for r in rects.iter().filter(|r| r.area() > 0.0) {
        let b = vertices.len() as u32;
        vertices.extend([
            Vec3::new(r.x0, r.y0, z),
            Vec3::new(r.x1, r.y0, z),
            Vec3::new(r.x1, r.y1, z),
            Vec3::new(r.x0, r.y1, z),
        ]);
        triangles.extend([[b, b + 1, b + 2], [b, b + 2, b + 3]]);
    }
    let normals = vec![Vec3::Z; vertices.len()];
    TriangleMesh::new(vertices, normals, triangles, Vec::new()).ok()
}

fn surface(color: [f64; 3], roughness: f64, specular: f64) -> MaterialParams {
    MaterialParams { base_color: color, roughness, opacity: 1.0, specular, texture: None }
}

const FACADE_PALETTE: [[f64; 3]; 5] = [
    [0.72, 0.70, 0.66],
    [0.60, 0.55, 0.50],
    [0.78, 0.74, 0.62],
    [0.52, 0.54, 0.58],
    [0.66, 0.45, 0.38],
];

fn scenery_for(layout: &UrbanLayout, extent: Rect, seed: u64) -> Vec<Scenery> {
    let g = layout.ground_height;
    let mut out = Vec::new();
    let mut push = |class, mesh: Option<TriangleMesh>, material| {
        if let Some(mesh) = mesh {
            out.push(Scenery { class, mesh: Arc::new(mesh), material });
        }
    };
    // Open ground sits a centimeter under the paved surfaces to avoid z-fighting.
    push(SceneryClass::Ground, flat_quads(&[extent], g - 0.01), surface([0.42, 0.45, 0.33], 0.9, 0.05));
    push(SceneryClass::Ground, flat_quads(&layout.roads, g), surface([0.22, 0.22, 0.24], 0.8, 0.1));
    push(SceneryClass::Ground, flat_quads(&layout.blocks, g), surface([0.55, 0.54, 0.50], 0.85, 0.05));
    for (i, b) in layout.buildings.iter().enumerate() {
        let f = b.footprint;
        let mesh = box_mesh(Vec3::new(f.x0, f.y0, g), Vec3::new(f.x1, f.y1, g + b.height), false);
        let color = FACADE_PALETTE[(splitmix64(seed ^ i as u64) % FACADE_PALETTE.len() as u64) as usize];
        push(SceneryClass::Building, Some(mesh), surface(color, 0.7, 0.15));
    }
    out
}

fn eye_inside_building(scene: &ComposedScene, layout: &UrbanLayout) -> bool {
    let eye = scene.camera.position();
    layout
        .buildings
        .iter()
        .any(|b| b.footprint.contains_xy(eye.x, eye.y) && eye.z <= layout.ground_height + b.height)
}

/// Seed → layout → car placement → water → domain randomization.
pub fn compose_frame(cfg: &GenerationConfig, res: &Resources, frame_id: u64, level: u8) -> Result<FrameScene> {
    let seed = derive_frame_seed(SeedSpec { master_seed: cfg.master_seed, frame_index: frame_id });
    let mut stream = RngStream::new(seed);
    let layout = match &res.layout {
        Some(l) => l.clone(),
        None => generate_layout(&cfg.layout, &mut stream)?,
    };
    let placement = place_objects(
        &layout,
        &res.catalog,
        &cfg.randomization,
        cfg.cars_per_frame as usize,
        &mut stream,
    )?;
    let mut notices: Vec<String> = placement.saturation.into_iter().collect();

    let extent = layout.ground_rect().expanded(cfg.water.margin);
    let (w, h) = (cfg.resolution.width, cfg.resolution.height);
    let intrinsics = Intrinsics::from_fov(w, h, cfg.fov_deg);
    let mut template = ComposedScene::empty(CameraModel::look_at(intrinsics, Vec3::new(0.0, -10.0, 5.0), Vec3::ZERO));
    template.instances = placement.instances;
    template.scenery = scenery_for(&layout, extent, seed);
    template.ground_height = layout.ground_height;
    template.lights = vec![LightParams::from_angles(0.0, cfg.light_elevation_deg.to_radians(), 1.0, cfg.ambient)];
    template.background = res.background.clone();
    if level > 0 {
        let wt = &cfg.water;
        let base = level_to_water_height(level, &cfg.flood_table, 0.0, layout.ground_height)?;
        template.water = Some(WaterLayer {
            instance_id: WATER_INSTANCE_ID,
            params: WaterSurfaceParams {
                base_level: base.base_level,
                level_class: level,
                waves: wt.waves.clone(),
                gravity: wt.gravity,
                foam_threshold: wt.foam_threshold,
                roughness_noise_amp: wt.roughness_noise_amp,
                material: wt.material.clone(),
                wavy_texture: res.wavy_texture.clone(),
            },
            extent,
            grid_resolution: wt.grid_resolution,
        });
    }

    let mut randomized = randomize_scene(&template, &cfg.randomization, &cfg.flood_table, &mut stream)?;
    let mut redraws = 0;
    while eye_inside_building(&randomized.scene, &layout) && redraws < CAMERA_REDRAWS {
        randomized = randomize_scene(&template, &cfg.randomization, &cfg.flood_table, &mut stream)?;
        redraws += 1;
    }
    if eye_inside_building(&randomized.scene, &layout) {
        notices.push(format!("camera still inside a building after {CAMERA_REDRAWS} redraws"));
    }
    notices.extend(randomized.notices);
    Ok(FrameScene { scene: randomized.scene, seed, notices })
}

/// A rendered and labeled frame, not yet written.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub frame: FrameScene,
    pub buffers: FrameBuffers,
    pub record: AnnotationRecord,
}

pub fn produce_frame(cfg: &GenerationConfig, res: &Resources, frame_id: u64, level: u8) -> Result<FrameOutput> {
    let frame = compose_frame(cfg, res, frame_id, level)?;
    let buffers = render_frame(&frame.scene, cfg.resolution.width, cfg.resolution.height)?;
    let mut record = build_annotation_record(&frame.scene, &buffers, cfg.min_pixels, &cfg.flood_table)?;
    record.frame_id = frame_id;
    record.seed = frame.seed;
    Ok(FrameOutput { frame, buffers, record })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes every file of one frame and returns its manifest entry.
pub fn write_frame(dir: &Path, out: &FrameOutput) -> Result<ManifestEntry> {
    let id = out.record.frame_id;
    let files = FrameFiles::for_frame(id);
    for blob in encode_buffers(&out.buffers)? {
        let name = files.for_suffix(blob.suffix).expect("every channel has a file name");
        write_file(dir, name, &blob.bytes)?;
    }
    let cam = &out.frame.scene.camera;
    let cloud = depth_to_pointcloud(&out.buffers.depth, &cam.intrinsics);
    write_file(dir, &files.pointcloud, export_pointcloud_ply(&cloud).as_bytes())?;
    let yolo = export_yolo(&out.record, out.buffers.width, out.buffers.height);
    write_file(dir, &files.yolo, yolo.as_bytes())?;
    write_file(dir, &files.camera, export_camera(cam).as_bytes())?;
    Ok(ManifestEntry {
        frame_id: id,
        seed: out.record.seed,
        scene_flood_level: out.record.scene_flood_level,
        files,
        instances: out.record.instances.clone(),
        notices: out.frame.notices.clone(),
    })
}

/// Generates every frame of `cfg` into its output directory with `jobs`
/// worker threads (0 = all cores). Output bytes do not depend on `jobs`.
pub fn generate_dataset(cfg: &GenerationConfig, jobs: usize) -> Result<DatasetManifest> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let dir = cfg
        .output_dir
        .as_deref()
        .ok_or_else(|| Error::Config("output_dir is not set".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let stale = dir.join(MANIFEST_FILE);
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| Error::io(format!("removing {}", stale.display()), e))?;
    }
    write_file(dir, PARTIAL_MARKER, b"generation in progress\n")?;

    let result = (|| {
        let res = Resources::load(cfg)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let plan = frame_plan(cfg);
        let results: Vec<Result<ManifestEntry>> = pool.install(|| {
            plan.par_iter()
                .map(|&(id, level)| {
                    produce_frame(cfg, &res, id, level)
                        .and_then(|out| write_frame(dir, &out))
                        .map_err(|e| Error::Frame { frame_id: id as usize, source: Box::new(e) })
                })
                .collect()
        });
        // The lowest failing frame is reported, whatever the scheduling.
        let frames = results.into_iter().collect::<Result<Vec<_>>>()?;
        let manifest = DatasetManifest::new(cfg, frames);
        write_file(dir, MANIFEST_FILE, manifest.to_json().as_bytes())?;
        Ok(manifest)
    })();

    match result {
        Ok(m) => {
            let marker = dir.join(PARTIAL_MARKER);
            fs::remove_file(&marker).map_err(|e| Error::io(format!("removing {}", marker.display()), e))?;
            Ok(m)
        }
        Err(e) => {
            // Best effort: the original error matters more than the marker.
            let _ = write_file(dir, PARTIAL_MARKER, format!("generation failed: {e}\n").as_bytes());
            Err(e)
        }
    }
}

/// Rewrites the YOLO label files of a generated dataset into `out_dir` from
/// its manifest. Returns the number of files written.
pub fn export_labels(dataset: &Path, out_dir: &Path) -> Result<usize> {
    let manifest = DatasetManifest::load(&dataset.join(MANIFEST_FILE))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let r = manifest.config.resolution;
    for f in &manifest.frames {
        let text = crate::annotate::format_yolo(f.instances.iter().filter_map(|i| i.bbox2d.as_ref()), r.width, r.height);
        write_file(out_dir, &f.files.yolo, text.as_bytes())?;
    }
    Ok(manifest.frames.len())
}
