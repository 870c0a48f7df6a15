//! Seeded procedural layout and domain-randomized placement.
//!
//! Every frame owns one [`RngStream`] derived from `(master_seed, frame_index)`,
//! so frames can be produced in any order or concurrently with identical results.

mod layout;
mod placement;
mod randomize;
mod seed;

pub use layout::{generate_layout, Building, LayoutParams, UrbanLayout};
pub use placement::{place_objects, Asset, AssetCatalog, Placement, MAX_PLACEMENT_ATTEMPTS};
pub use randomize::{randomize_scene, Interval, RandomizationRanges, RandomizedScene};
pub use seed::{derive_frame_seed, splitmix64, RngStream, SeedSpec};
