//! Scene fixtures shared by the benchmarks.

use floodsynth::pipeline::{compose_frame, Resolution, Resources};
use floodsynth::{ComposedScene, GenerationConfig};

/// Default config at `size × size` with three cars per frame.
pub fn config(size: u32) -> GenerationConfig {
    GenerationConfig {
        resolution: Resolution { width: size, height: size },
        master_seed: 7,
        cars_per_frame: 3,
        ..GenerationConfig::default()
    }
}

/// A composed frame at the given flood level.
pub fn scene(size: u32, level: u8) -> (GenerationConfig, Resources, ComposedScene) {
    let cfg = config(size);
    let res = Resources::load(&cfg).expect("default resources load");
    let scene = compose_frame(&cfg, &res, u64::from(level), level).expect("frame composes").scene;
    (cfg, res, scene)
}
