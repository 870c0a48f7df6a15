//! Config parsing, batch generation, the dataset manifest with its
//! statistics, and dataset QA.

mod config;
mod generate;
mod manifest;
mod validate;

pub use config::{
    parse_config, AssetSpec, BackgroundSpec, FramesPerLevel, GenerationConfig, ParsedConfig, Resolution,
    WaterTemplate, REQUIRED_KEYS,
};
pub use generate::{
    compose_frame, export_labels, frame_plan, generate_dataset, produce_frame, write_frame, FrameOutput, FrameScene, Resources,
    WATER_INSTANCE_ID,
};
pub use manifest::{
    dataset_stats, Conventions, DatasetManifest, FrameFiles, LevelCounts, ManifestEntry, StatsTable, MANIFEST_FILE,
    PARTIAL_MARKER,
};
pub use validate::{validate_dataset, QaReport, Violation, ViolationKind, TIGHTNESS_SAMPLE};
