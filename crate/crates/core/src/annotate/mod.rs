//! Per-frame labels derived from the frame buffers and the scene, and the
//! on-disk encodings of every output file.

mod encode;
mod formats;
mod labels;

pub use encode::{
    decode_buffers, decode_pfm, decode_pgm16, decode_png_rgb8, encode_buffers, encode_pfm, encode_pgm16,
    encode_png_rgb8, FileBlob, CHANNEL_SUFFIXES,
};
pub use formats::{
    export_camera, export_pointcloud_ply, export_yolo, format_yolo, parse_camera, parse_pointcloud_ply, parse_yolo,
    parse_yolo_line, CameraJson, YoloLine,
};
pub use labels::{
    bbox2d_from_instance_mask, bbox3d_of_instance, build_annotation_record, AnnotationRecord, BBox2D, BBox3D,
    CameraRecord, InstanceLabel,
};
