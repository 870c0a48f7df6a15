use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn floodsynth() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_floodsynth"));
    cmd.env_remove("FLOODSYNTH_JOBS");
    cmd
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn small_config() -> Value {
    json!({
        "resolution": [48, 32],
        "master_seed": 11,
        "output_dir": "ignored",
        "cars_per_frame": 2,
        "min_pixels": 4,
    })
}

fn generate(config: &Path, out: &Path, extra: &[&str]) -> Output {
    floodsynth()
        .args(["generate", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn generate_validate_stats_export() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &small_config());
    let out = tmp.path().join("ds");
    let g = generate(&cfg, &out, &["--jobs", "2"]);
    assert_eq!(g.status.code(), Some(0), "{}", stderr(&g));
    assert!(stdout(&g).contains("wrote 5 frames"));

    let v = floodsynth().args(["validate", "--dataset"]).arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
    assert!(stdout(&v).contains("0 violation(s)"));

    let s = floodsynth().args(["stats", "--manifest"]).arg(out.join("manifest.json")).output().unwrap();
    assert_eq!(s.status.code(), Some(0));
    let text = stdout(&s);
    let json_start = text.find('{').unwrap();
    let table: Vec<&str> = text[..json_start].lines().collect();
    assert_eq!(table[0].split_whitespace().collect::<Vec<_>>(), ["level", "images", "instances"]);
    assert_eq!(table.len(), 8);
    // Right-aligned numeric columns end at the same offset.
    assert!(table.iter().all(|l| l.len() == table[0].len()));
    let stats: Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(stats["total_images"], 5);
    assert_eq!(stats["flooded_images"], 4);
    for l in 0..5 {
        assert_eq!(stats["levels"][l]["image_count"], 1);
    }

    let e = floodsynth()
        .args(["export-labels", "--format", "yolo", "--dataset"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let labels = out.join("labels").join("yolo");
    for id in 0..5 {
        let name = format!("frame_{id:06}.txt");
        assert_eq!(std::fs::read(labels.join(&name)).unwrap(), std::fs::read(out.join(&name)).unwrap());
    }
}

#[test]
fn jobs_env_and_flag_give_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &small_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ga = floodsynth()
        .env("FLOODSYNTH_JOBS", "1")
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert_eq!(ga.status.code(), Some(0), "{}", stderr(&ga));
    let gb = generate(&cfg, &b, &["--jobs", "3"]);
    assert_eq!(gb.status.code(), Some(0));
    for name in ["manifest.json", "frame_000002.png", "frame_000004.inst.pgm", "frame_000003.txt"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }

    let bad = floodsynth()
        .env("FLOODSYNTH_JOBS", "many")
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("c"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["frames_per_level"] = json!({"2": 1});
    let base = write_config(tmp.path(), "a.json", &cfg);
    cfg["master_seed"] = json!(99);
    let seeded = write_config(tmp.path(), "b.json", &cfg);

    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(generate(&base, &a, &["--seed", "99"]).status.success());
    assert!(generate(&seeded, &b, &[]).status.success());
    assert!(generate(&base, &c, &[]).status.success());
    let png = |d: &Path| std::fs::read(d.join("frame_000000.png")).unwrap();
    assert_eq!(png(&a), png(&b));
    assert_ne!(png(&a), png(&c));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let malformed = tmp.path().join("bad.json");
    std::fs::write(&malformed, "{\"resolution\": [4, 4],").unwrap();
    assert_eq!(generate(&malformed, &out, &[]).status.code(), Some(2));

    let mut cfg = small_config();
    cfg.as_object_mut().unwrap().remove("resolution");
    let missing = write_config(tmp.path(), "missing.json", &cfg);
    let g = generate(&missing, &out, &[]);
    assert_eq!(g.status.code(), Some(2));
    assert!(stderr(&g).contains("resolution"), "{}", stderr(&g));

    let mut cfg = small_config();
    cfg["fov_deg"] = json!(-5.0);
    let invalid = write_config(tmp.path(), "invalid.json", &cfg);
    assert_eq!(generate(&invalid, &out, &[]).status.code(), Some(2));

    let unknown_format = floodsynth()
        .args(["export-labels", "--format", "coco", "--dataset"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(unknown_format.status.code(), Some(2));
}

#[test]
fn unknown_keys_warn_but_generate() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["frames_per_level"] = json!({"0": 1});
    cfg["colour"] = json!("red");
    let path = write_config(tmp.path(), "cfg.json", &cfg);
    let g = generate(&path, &tmp.path().join("out"), &[]);
    assert_eq!(g.status.code(), Some(0));
    assert!(stderr(&g).contains("unknown key colour"), "{}", stderr(&g));
}

#[test]
fn io_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let absent = tmp.path().join("absent.json");
    assert_eq!(generate(&absent, &tmp.path().join("out"), &[]).status.code(), Some(3));

    let s = floodsynth().args(["stats", "--manifest"]).arg(&absent).output().unwrap();
    assert_eq!(s.status.code(), Some(3));

    let garbage = tmp.path().join("manifest.json");
    std::fs::write(&garbage, "not json").unwrap();
    let s = floodsynth().args(["stats", "--manifest"]).arg(&garbage).output().unwrap();
    assert_eq!(s.status.code(), Some(3));

    let v = floodsynth().args(["validate", "--dataset"]).arg(tmp.path().join("nowhere")).output().unwrap();
    assert_eq!(v.status.code(), Some(3));
}

#[test]
fn corrupted_dataset_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["frames_per_level"] = json!({"1": 1, "3": 1});
    let path = write_config(tmp.path(), "cfg.json", &cfg);
    let out = tmp.path().join("ds");
    assert!(generate(&path, &out, &[]).status.success());

    std::fs::write(out.join("frame_000001.txt"), "3 1.500000 0.500000 0.100000 0.100000\n").unwrap();
    std::fs::remove_file(out.join("frame_000000.normal.pfm")).unwrap();
    let v = floodsynth().args(["validate", "--dataset"]).arg(&out).output().unwrap();
    assert_eq!(v.status.code(), Some(1));
    let report = stdout(&v);
    assert!(report.contains("frame_000000.normal.pfm"), "{report}");
    assert!(report.contains("frame_000001.txt"), "{report}");
}
