//! Deterministic synthetic urban-flood dataset generation.
//!
//! The crate composes parameterized street scenes, floods them with a
//! wave-displaced water surface, renders a multi-channel G-buffer with a
//! software rasterizer, and derives per-frame annotations (segmentation,
//! 2D/3D boxes, depth, normals, point cloud, camera pose) with per-vehicle
//! flood levels 0–4.

// `!(x > 0.0)` is used deliberately so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotate;
pub mod error;
pub mod flood;
pub mod geometry;
pub mod mesh;
pub mod pipeline;
pub mod procgen;
pub mod render;
pub mod scene;
pub mod texture;

pub use error::{Error, Result};
pub use geometry::{Aabb, Mat3, Rect, RigidTransform, Vec3};
pub use mesh::{load_mesh_obj, TriangleMesh};
pub use scene::{validate_scene, CameraModel, ComposedScene, Intrinsics, LightParams, MaterialParams};
pub use render::{render_frame, FrameBuffers};
pub use annotate::{build_annotation_record, AnnotationRecord};
pub use pipeline::{dataset_stats, generate_dataset, parse_config, validate_dataset, DatasetManifest, GenerationConfig, StatsTable};
