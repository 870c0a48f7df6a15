//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! reproducible criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use floodsynth::annotate::{
    decode_pfm, decode_pgm16, encode_pfm, encode_pgm16, export_camera, export_pointcloud_ply, format_yolo,
    parse_camera, parse_pointcloud_ply, parse_yolo, BBox2D, BBox3D, InstanceLabel,
};
use floodsynth::flood::{
    flood_level_label, level_to_water_height, submersion_ratio, FloodLevelTable, WaveComponent, WaterSurfaceParams,
};
use floodsynth::mesh::builtin_car;
use floodsynth::pipeline::{compose_frame, FrameFiles, ManifestEntry, Resources};
use floodsynth::procgen::RngStream;
use floodsynth::render::RaycastReference;
use floodsynth::scene::{CameraModel, Intrinsics, SemanticClass};
use floodsynth::{dataset_stats, render_frame, DatasetManifest, GenerationConfig, RigidTransform, Vec3};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const TABLE3_IMAGES: [u64; 5] = [14593, 17485, 14541, 12837, 10661];
const TABLE3_INSTANCES: [u64; 5] = [37662, 55624, 36141, 61132, 24476];
const TABLE3_TOTAL_IMAGES: u64 = 70117;
const TABLE3_TOTAL_INSTANCES: u64 = 215035;
const TABLE3_FLOODED_IMAGES: u64 = 55524;
const STATS_RUNTIME_LIMIT: Duration = Duration::from_secs(1);

const DESK_RESOLUTION: u32 = 256;
const DESK_FRAMES_PER_LEVEL: u64 = 10;
const DESK_CARS_PER_FRAME: u32 = 3;
const DESK_RUNTIME_LIMIT: Duration = Duration::from_secs(300);

const ORACLE_SCENES: u64 = 20;
const ORACLE_SIZE: u32 = 32;
const ORACLE_MIN_AGREEMENT: f64 = 0.99;
const ORACLE_DEPTH_REL_TOL: f64 = 1e-4;

const WAVE_NORMAL_SAMPLES: usize = 1000;
const WAVE_NORMAL_TOL: f64 = 1e-3;
const WAVE_HEIGHT_SAMPLES: usize = 100_000;

const LABEL_TRIALS_PER_LEVEL: usize = 100;
const YOLO_PIXEL_TOL: f64 = 0.5;

fn main() {
    let criteria: [Criterion; 7] = [
        ("statistics contract", table_stats),
        ("desk-scale generation", desk_generation),
        ("rasterizer vs ray-cast oracle", oracle_equivalence),
        ("determinism across runs and job counts", determinism),
        ("wave-field numerics", wave_numerics),
        ("flood label round-trip", label_round_trip),
        ("format round-trips", format_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "criterion 8 NOT REPRODUCIBLE: detection mAP needs a YOLOv10 model trained on 70K+ images and the \
         realistic score needs an external learned metric; criteria 1 to 7 stand in for them"
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn placeholder_label(level: u8) -> InstanceLabel {
    InstanceLabel {
        instance_id: 1,
        semantic_class: SemanticClass::Car,
        flood_level: level,
        submersion_ratio: 0.0,
        bbox2d: Some(BBox2D { x0: 0, y0: 0, x1: 1, y1: 1, class_id: level, instance_id: 1 }),
        bbox3d: BBox3D {
            corners: [Vec3::ZERO; 8],
            camera_corners: [Vec3::ZERO; 8],
            center: Vec3::ZERO,
            extents: Vec3::ZERO,
            yaw: 0.0,
            instance_id: 1,
        },
        pixel_count: 4,
    }
}

/// Manifest with the published per-level image and instance counts; each
/// level's instances are spread round-robin over that level's frames.
fn table3_manifest() -> DatasetManifest {
    let mut frames = Vec::new();
    for level in 0..5u8 {
        let (images, instances) = (TABLE3_IMAGES[level as usize], TABLE3_INSTANCES[level as usize]);
        for k in 0..images {
            let n = instances / images + u64::from(k < instances % images);
            let frame_id = frames.len() as u64;
            frames.push(ManifestEntry {
                frame_id,
                seed: frame_id,
                scene_flood_level: level,
                files: FrameFiles::for_frame(frame_id),
                instances: (0..n).map(|_| placeholder_label(level)).collect(),
                notices: Vec::new(),
            });
        }
    }
    DatasetManifest::new(&GenerationConfig::default(), frames)
}

fn table_stats() -> Outcome {
    let manifest = table3_manifest();
    let start = Instant::now();
    let stats = dataset_stats(&manifest);
    let elapsed = start.elapsed();
    for l in 0..5 {
        check(
            stats.levels[l].image_count == TABLE3_IMAGES[l] && stats.levels[l].instance_count == TABLE3_INSTANCES[l],
            || format!("level {l} counts {:?}", stats.levels[l]),
        )?;
    }
    check(stats.total_images == TABLE3_TOTAL_IMAGES, || format!("total images {}", stats.total_images))?;
    check(stats.total_instances == TABLE3_TOTAL_INSTANCES, || {
        format!("total instances {}", stats.total_instances)
    })?;
    check(stats.flooded_images == TABLE3_FLOODED_IMAGES, || format!("flooded images {}", stats.flooded_images))?;
    check(elapsed < STATS_RUNTIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} images, {} instances, {} flooded images in {elapsed:.2?}",
        stats.total_images, stats.total_instances, stats.flooded_images
    ))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_floodsynth")
}

fn desk_config(dir: &Path) -> PathBuf {
    let levels: BTreeMap<String, u64> = (0..5).map(|l| (l.to_string(), DESK_FRAMES_PER_LEVEL)).collect();
    let cfg = serde_json::json!({
        "resolution": [DESK_RESOLUTION, DESK_RESOLUTION],
        "master_seed": 2024,
        "output_dir": "unused",
        "frames_per_level": levels,
        "cars_per_frame": DESK_CARS_PER_FRAME,
    });
    let path = dir.join("desk.json");
    std::fs::write(&path, cfg.to_string()).expect("write config");
    path
}

fn generate(config: &Path, out: &Path, jobs: usize) -> Result<Duration, String> {
    let start = Instant::now();
    let run = Command::new(binary())
        .args(["generate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--jobs", &jobs.to_string()])
        .output()
        .map_err(|e| format!("cannot run generator: {e}"))?;
    check(run.status.success(), || {
        format!("generate --jobs {jobs} exited with {}: {}", run.status, String::from_utf8_lossy(&run.stderr).trim())
    })?;
    Ok(start.elapsed())
}

fn desk_generation() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = desk_config(tmp.path());
    let out = tmp.path().join("dataset");
    let elapsed = generate(&config, &out, 0)?;
    check(elapsed < DESK_RUNTIME_LIMIT, || format!("generation took {elapsed:?}"))?;
    let manifest = DatasetManifest::load(&out.join("manifest.json")).map_err(|e| e.to_string())?;
    let expected = 5 * DESK_FRAMES_PER_LEVEL as usize;
    check(manifest.frames.len() == expected, || format!("{} frames written", manifest.frames.len()))?;
    let validate = Command::new(binary())
        .args(["validate", "--dataset"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    check(validate.status.success(), || {
        format!("validate reported: {}", String::from_utf8_lossy(&validate.stdout).trim())
    })?;
    Ok(format!(
        "{expected} frames at {DESK_RESOLUTION}x{DESK_RESOLUTION} in {elapsed:.1?}, {} labeled cars, validate clean",
        manifest.stats.total_instances
    ))
}

fn oracle_equivalence() -> Outcome {
    let cfg = GenerationConfig {
        resolution: floodsynth::pipeline::Resolution { width: ORACLE_SIZE, height: ORACLE_SIZE },
        master_seed: 31,
        ..GenerationConfig::default()
    };
    let res = Resources::load(&cfg).map_err(|e| e.to_string())?;
    let (mut same, mut total, mut both_hit) = (0usize, 0usize, 0usize);
    let mut worst_rel = 0.0f64;
    for frame in 0..ORACLE_SCENES {
        let level = (frame % 5) as u8;
        let scene = compose_frame(&cfg, &res, frame, level).map_err(|e| e.to_string())?.scene;
        let fb = render_frame(&scene, ORACLE_SIZE, ORACLE_SIZE).map_err(|e| e.to_string())?;
        let oracle = RaycastReference::new(&scene, &scene.camera);
        for v in 0..ORACLE_SIZE {
            for u in 0..ORACLE_SIZE {
                let p = fb.index(u, v);
                let hit = oracle.cast(u, v);
                let id = if hit.hit { hit.instance_id } else { 0 };
                total += 1;
                if id == fb.instance[p] && hit.hit == (fb.depth[p] > 0.0) {
                    same += 1;
                    if hit.hit {
                        both_hit += 1;
                        worst_rel = worst_rel.max((f64::from(fb.depth[p]) - hit.depth).abs() / hit.depth);
                    }
                }
            }
        }
    }
    let agreement = same as f64 / total as f64;
    check(agreement >= ORACLE_MIN_AGREEMENT, || format!("only {same} of {total} pixels agree"))?;
    check(worst_rel <= ORACLE_DEPTH_REL_TOL, || format!("depth relative error {worst_rel:e}"))?;
    Ok(format!(
        "{same}/{total} pixels agree ({:.2}%), max depth rel error {worst_rel:.1e} over {both_hit} hits",
        100.0 * agreement
    ))
}

fn tree_digests(root: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(root).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let name = path.file_name().expect("file name").to_string_lossy().into_owned();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        out.insert(name, digest);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = desk_config(tmp.path());
    let (a, b) = (tmp.path().join("jobs1"), tmp.path().join("jobs8"));
    generate(&config, &a, 1)?;
    generate(&config, &b, 8)?;
    let (da, db) = (tree_digests(&a)?, tree_digests(&b)?);
    check(!da.is_empty(), || "no files written".into())?;
    check(da.keys().eq(db.keys()), || "runs wrote different file sets".into())?;
    let differing: Vec<&String> = da.iter().filter(|(k, v)| db[*k] != **v).map(|(k, _)| k).collect();
    check(differing.is_empty(), || format!("{} files differ, first {}", differing.len(), differing[0]))?;
    Ok(format!("{} files with identical SHA-256 for --jobs 1 and --jobs 8", da.len()))
}

fn random_water(rng: &mut RngStream) -> WaterSurfaceParams {
    let n = 1 + rng.index(4);
    let mut u = |lo, hi| rng.sample_uniform(lo, hi).expect("ordered bounds");
    let waves = (0..n)
        .map(|_| WaveComponent { amplitude: u(0.0, 0.2), wave_vector: [u(-3.0, 3.0), u(-3.0, 3.0)], phase: u(0.0, 6.3) })
        .collect();
    WaterSurfaceParams { base_level: u(-2.0, 2.0), waves, roughness_noise_amp: 0.0, ..WaterSurfaceParams::default() }
}

fn wave_numerics() -> Outcome {
    let mut rng = RngStream::new(0x5eed);
    let step = 1e-5;
    let mut worst_normal = 0.0f64;
    for _ in 0..WAVE_NORMAL_SAMPLES {
        let w = random_water(&mut rng);
        let mut u = |lo, hi| rng.sample_uniform(lo, hi).expect("ordered bounds");
        let (x, y, t) = (u(-50.0, 50.0), u(-50.0, 50.0), u(0.0, 100.0));
        let hx = (w.wave_height(x + step, y, t) - w.wave_height(x - step, y, t)) / (2.0 * step);
        let hy = (w.wave_height(x, y + step, t) - w.wave_height(x, y - step, t)) / (2.0 * step);
        let fd = Vec3::new(-hx, -hy, 1.0).normalized();
        let n = w.wave_normal(x, y, t);
        worst_normal = worst_normal.max((n.x - fd.x).abs()).max((n.y - fd.y).abs()).max((n.z - fd.z).abs());
    }
    check(worst_normal <= WAVE_NORMAL_TOL, || format!("normal error {worst_normal:e}"))?;

    let mut outside = 0usize;
    for _ in 0..WAVE_HEIGHT_SAMPLES {
        let w = random_water(&mut rng);
        let mut u = |lo, hi| rng.sample_uniform(lo, hi).expect("ordered bounds");
        let (x, y, t) = (u(-500.0, 500.0), u(-500.0, 500.0), u(0.0, 1000.0));
        let h = w.wave_height(x, y, t);
        let a = w.total_amplitude();
        if !(h >= w.base_level - a && h <= w.base_level + a) {
            outside += 1;
        }
    }
    check(outside == 0, || format!("{outside} heights outside [L - sum A, L + sum A]"))?;
    Ok(format!(
        "max normal error {worst_normal:.1e} over {WAVE_NORMAL_SAMPLES} samples, {WAVE_HEIGHT_SAMPLES} heights in bounds"
    ))
}

fn label_round_trip() -> Outcome {
    let table = FloodLevelTable::default();
    let h = table.reference_height;
    let car = builtin_car(h);
    let mut rng = RngStream::new(6);
    let mut correct = 0;
    for level in 1..=4u8 {
        let (lo, hi) = table.band(level).map_err(|e| e.to_string())?;
        let half_band = 0.5 * (hi - lo) * h;
        for _ in 0..LABEL_TRIALS_PER_LEVEL {
            let mut u = |lo, hi| rng.sample_uniform(lo, hi).expect("ordered bounds");
            let ground = u(-5.0, 5.0);
            let jitter = 0.98 * u(-half_band, half_band);
            let water = level_to_water_height(level, &table, jitter, ground).map_err(|e| e.to_string())?;
            check(!water.clamped, || format!("jitter {jitter} left the level {level} band"))?;
            let pose = RigidTransform::new(floodsynth::Mat3::rotation_z(u(0.0, 6.3)), Vec3::new(u(-9.0, 9.0), u(-9.0, 9.0), ground));
            let aabb = car.object_aabb().transformed(&pose);
            let ratio = submersion_ratio(&aabb, water.base_level).map_err(|e| e.to_string())?;
            let label = flood_level_label(true, ratio, &table).map_err(|e| e.to_string())?;
            check(label == level, || format!("level {level} jitter {jitter} labeled {label} (ratio {ratio})"))?;
            correct += 1;
        }
    }
    Ok(format!("{correct}/{} trials return their level", 4 * LABEL_TRIALS_PER_LEVEL))
}

fn format_round_trips() -> Outcome {
    let mut rng = RngStream::new(7);
    let mut worst_yolo = 0.0f64;
    for _ in 0..500 {
        let (w, h) = (1 + rng.index(2048) as u32, 1 + rng.index(2048) as u32);
        let (xa, xb) = (rng.index(w as usize) as u32, rng.index(w as usize) as u32);
        let (ya, yb) = (rng.index(h as usize) as u32, rng.index(h as usize) as u32);
        let b = BBox2D {
            x0: xa.min(xb),
            y0: ya.min(yb),
            x1: xa.max(xb),
            y1: ya.max(yb),
            class_id: rng.index(5) as u8,
            instance_id: 1,
        };
        let lines = parse_yolo(&format_yolo([&b], w, h))?;
        check(lines.len() == 1 && lines[0].class == b.class_id, || format!("bad YOLO re-parse for {b:?}"))?;
        let (x0, y0, x1, y1) = lines[0].pixel_bounds(w, h);
        for (got, want) in [(x0, b.x0), (y0, b.y0), (x1, b.x1), (y1, b.y1)] {
            worst_yolo = worst_yolo.max((got - f64::from(want)).abs());
        }
    }
    check(worst_yolo <= YOLO_PIXEL_TOL, || format!("YOLO bounds off by {worst_yolo} px"))?;

    let (w, h) = (37u32, 23u32);
    let floats: Vec<f32> = (0..(w * h * 3) as usize).map(|_| f32::from_bits(rng.next_u64() as u32 & 0xff7f_ffff)).collect();
    for channels in [1usize, 3] {
        let samples = &floats[..(w * h) as usize * channels];
        let (dw, dh, dc, back) = decode_pfm(&encode_pfm(w, h, channels, samples)).map_err(|e| e.to_string())?;
        let bit_equal = back.iter().zip(samples).all(|(a, b)| a.to_bits() == b.to_bits());
        check((dw, dh, dc) == (w, h, channels) && back.len() == samples.len() && bit_equal, || {
            format!("PFM with {channels} channels did not round-trip")
        })?;
    }
    let ids: Vec<u16> = (0..(w * h) as usize).map(|_| rng.next_u64() as u16).collect();
    let (dw, dh, back) = decode_pgm16(&encode_pgm16(w, h, &ids)).map_err(|e| e.to_string())?;
    check((dw, dh) == (w, h) && back == ids, || "PGM did not round-trip".into())?;

    // PLY stores six decimals, so source points on that grid come back exactly.
    let points: Vec<Vec3> = (0..200)
        .map(|_| {
            let mut c = || ((rng.next_u64() % 200_000_001) as f64 - 1e8) / 1e6;
            Vec3::new(c(), c(), c())
        })
        .collect();
    let text = export_pointcloud_ply(&points);
    let back = parse_pointcloud_ply(&text).map_err(|e| e.to_string())?;
    check(back == points, || "PLY points did not round-trip".into())?;
    check(export_pointcloud_ply(&back) == text, || "PLY re-export differs".into())?;

    let mut cameras = 0;
    for _ in 0..100 {
        let mut u = |lo, hi| rng.sample_uniform(lo, hi).expect("ordered bounds");
        let k = Intrinsics::from_fov(320, 240, u(20.0, 120.0));
        let eye = Vec3::new(u(-50.0, 50.0), u(-50.0, 50.0), u(0.5, 30.0));
        let target = Vec3::new(u(-50.0, 50.0), u(-50.0, 50.0), u(0.0, 2.0));
        let cam = CameraModel::look_at(k, eye, target);
        let parsed = parse_camera(&export_camera(&cam)).map_err(|e| e.to_string())?;
        let back = parsed.to_camera();
        check(back.intrinsics == cam.intrinsics && back.extrinsics == cam.extrinsics, || {
            "camera JSON did not round-trip bit-exactly".into()
        })?;
        check(parsed.position == cam.position().to_array(), || "camera position changed".into())?;
        cameras += 1;
    }
    Ok(format!(
        "YOLO within {worst_yolo:.3} px over 500 boxes; PFM, PGM, PLY and {cameras} cameras decode exactly"
    ))
}
