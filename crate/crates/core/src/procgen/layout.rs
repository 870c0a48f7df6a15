use std::path::Path;

use serde::{Deserialize, Serialize};

use super::randomize::Interval;
use super::seed::RngStream;
use crate::error::{Error, Result};
use crate::geometry::Rect;

/// Parameters for the built-in grid city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    pub blocks_x: u32,
    pub blocks_y: u32,
    pub block_size: f64,
    pub road_width: f64,
    pub building_height_range: Interval,
    pub buildings_per_block: u32,
    pub ground_height: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            blocks_x: 2,
            blocks_y: 2,
            block_size: 30.0,
            road_width: 10.0,
            building_height_range: Interval::new(6.0, 24.0),
            buildings_per_block: 2,
            ground_height: 0.0,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.blocks_x == 0 || self.blocks_y == 0 {
            v.push("layout needs at least one block per axis".into());
        }
        if !(self.road_width > 0.0 && self.block_size > 0.0) {
            v.push("block_size and road_width must be > 0".into());
        }
        if !(self.road_width < self.block_size) {
            v.push(format!(
                "road_width {} must be smaller than block_size {}",
                self.road_width, self.block_size
            ));
        }
        if let Err(e) = self.building_height_range.check() {
            v.push(format!("building_height_range: {e}"));
        } else if !(self.building_height_range.lo > 0.0) {
            v.push("building heights must be > 0".into());
        }
        if !self.ground_height.is_finite() {
            v.push("ground_height must be finite".into());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    #[serde(flatten)]
    pub footprint: Rect,
    pub height: f64,
}

/// Ground-plane city description. Serializes to the layout ingestion schema
/// (`blocks` is optional there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanLayout {
    pub ground_height: f64,
    pub roads: Vec<Rect>,
    pub buildings: Vec<Building>,
    pub spawn_zones: Vec<Rect>,
    #[serde(default)]
    pub blocks: Vec<Rect>,
}

impl UrbanLayout {
    /// Bounding rectangle of every road, block and building.
    pub fn ground_rect(&self) -> Rect {
        self.roads
            .iter()
            .chain(&self.blocks)
            .chain(self.buildings.iter().map(|b| &b.footprint))
            .chain(&self.spawn_zones)
            .copied()
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Rect::new(-10.0, -10.0, 10.0, 10.0))
    }

    pub fn from_json(text: &str) -> Result<UrbanLayout> {
        let layout: UrbanLayout = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("layout file: {e}")))?;
        let problems = layout.validate();
        if problems.is_empty() {
            Ok(layout)
        } else {
            Err(Error::Config(format!("layout file: {}", problems.join("; "))))
        }
    }

    pub fn load(path: &Path) -> Result<UrbanLayout> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading layout {}", path.display()), e))?;
        UrbanLayout::from_json(&text)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let rects = self
            .roads
            .iter()
            .chain(&self.spawn_zones)
            .chain(&self.blocks)
            .chain(self.buildings.iter().map(|b| &b.footprint));
        if rects.clone().any(|r| !r.is_ordered() || !r.x0.is_finite() || !r.y1.is_finite()) {
            v.push("every rectangle needs x0 <= x1 and y0 <= y1".into());
        }
        for (i, a) in self.buildings.iter().enumerate() {
            if !(a.height > 0.0) {
                v.push(format!("building {i} has non-positive height"));
            }
            for (j, b) in self.buildings.iter().enumerate().skip(i + 1) {
                if a.footprint.overlaps(&b.footprint) {
                    v.push(format!("buildings {i} and {j} overlap"));
                }
            }
        }
        for (i, z) in self.spawn_zones.iter().enumerate() {
            if !self.roads.iter().any(|r| r.contains_rect(z)) {
                v.push(format!("spawn zone {i} does not lie on a road"));
            }
        }
        v
    }
}

/// Grid city: `blocks_x × blocks_y` blocks separated and surrounded by roads.
/// Roads are full-length strips along x plus the segments along y between
/// them, so together with the blocks they tile the ground rectangle exactly.
/// Each road is also a spawn zone.
pub fn generate_layout(p: &LayoutParams, stream: &mut RngStream) -> Result<UrbanLayout> {
    let problems = p.validate();
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let (bs, rw) = (p.block_size, p.road_width);
    // Shared edge coordinates so adjacent tiles meet exactly:
    // road [e[2i], e[2i+1]], block [e[2i+1], e[2i+2]].
    let edges = |blocks: u32| {
        let mut e = vec![0.0];
        for i in 0..blocks {
            let last = e[2 * i as usize];
            e.push(last + rw);
            e.push(last + rw + bs);
        }
        let last = *e.last().expect("non-empty");
        e.push(last + rw);
        e
    };
    let (ex, ey) = (edges(p.blocks_x), edges(p.blocks_y));
    let total_x = *ex.last().expect("non-empty");

    let mut roads = Vec::new();
    for j in 0..=p.blocks_y as usize {
        roads.push(Rect::new(0.0, ey[2 * j], total_x, ey[2 * j + 1]));
    }
    for j in 0..p.blocks_y as usize {
        for i in 0..=p.blocks_x as usize {
            roads.push(Rect::new(ex[2 * i], ey[2 * j + 1], ex[2 * i + 1], ey[2 * j + 2]));
        }
    }

    let mut blocks = Vec::new();
    let mut buildings = Vec::new();
    for j in 0..p.blocks_y as usize {
        for i in 0..p.blocks_x as usize {
            let (x0, y0) = (ex[2 * i + 1], ey[2 * j + 1]);
            let block = Rect::new(x0, y0, ex[2 * i + 2], ey[2 * j + 2]);
            blocks.push(block);
            let n = p.buildings_per_block;
            let lot_w = bs / n.max(1) as f64;
            for k in 0..n {
                let lot = Rect::new(x0 + k as f64 * lot_w, y0, x0 + (k + 1) as f64 * lot_w, block.y1);
                let setback = stream.sample_uniform(0.05, 0.2)? * lot.width().min(lot.height());
                let footprint = Rect::new(
                    lot.x0 + setback,
                    lot.y0 + setback,
                    lot.x1 - setback,
                    lot.y1 - setback,
                );
                let height = stream
                    .sample_uniform(p.building_height_range.lo, p.building_height_range.hi)?;
                buildings.push(Building { footprint, height });
            }
        }
    }

    Ok(UrbanLayout {
        ground_height: p.ground_height,
        spawn_zones: roads.clone(),
        roads,
        buildings,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(bx: u32, by: u32, n: u32) -> LayoutParams {
        LayoutParams {
            blocks_x: bx,
            blocks_y: by,
            buildings_per_block: n,
            ..LayoutParams::default()
        }
    }

    #[test]
    fn single_block_without_buildings() {
        let l = generate_layout(&params(1, 1, 0), &mut RngStream::new(0)).unwrap();
        assert!(l.buildings.is_empty());
        // Two x-strips and two y-segments around one block.
        assert_eq!(l.roads.len(), 4);
        assert_eq!(l.blocks.len(), 1);
        assert!(l.validate().is_empty());
    }

    #[test]
    fn four_blocks_one_building_each() {
        let l = generate_layout(&params(2, 2, 1), &mut RngStream::new(3)).unwrap();
        assert_eq!(l.buildings.len(), 4);
        for (i, a) in l.buildings.iter().enumerate() {
            for b in &l.buildings[i + 1..] {
                assert!(!a.footprint.overlaps(&b.footprint));
            }
        }
    }

    #[test]
    fn rejects_wide_roads() {
        let mut p = params(1, 1, 1);
        p.road_width = p.block_size;
        assert!(generate_layout(&p, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn ingestion_schema() {
        let text = r#"{"ground_height": 0.5,
            "roads": [{"x0": 0, "y0": 0, "x1": 50, "y1": 8}],
            "buildings": [{"x0": 0, "y0": 10, "x1": 10, "y1": 20, "height": 12}],
            "spawn_zones": [{"x0": 5, "y0": 1, "x1": 45, "y1": 7}]}"#;
        let l = UrbanLayout::from_json(text).unwrap();
        assert_eq!(l.buildings[0].height, 12.0);
        assert_eq!(l.ground_height, 0.5);
        let off_road = text.replace(r#""y0": 1, "x1": 45, "y1": 7"#, r#""y0": 1, "x1": 45, "y1": 9"#);
        assert!(UrbanLayout::from_json(&off_road).is_err());
    }

    proptest! {
        #[test]
        fn random_layouts_are_sound(
            bx in 1u32..5, by in 1u32..5, n in 0u32..5,
            bs in 10.0f64..60.0, road_frac in 0.05f64..0.9, seed in any::<u64>(),
        ) {
            let p = LayoutParams {
                blocks_x: bx, blocks_y: by, buildings_per_block: n,
                block_size: bs, road_width: bs * road_frac, ..LayoutParams::default()
            };
            let l = generate_layout(&p, &mut RngStream::new(seed)).unwrap();
            prop_assert_eq!(l.buildings.len() as u32, bx * by * n);
            // Every building lies inside exactly one block.
            for b in &l.buildings {
                let owners = l.blocks.iter().filter(|blk| blk.contains_rect(&b.footprint)).count();
                prop_assert_eq!(owners, 1);
                prop_assert!(b.height >= p.building_height_range.lo && b.height <= p.building_height_range.hi);
            }
            // Roads and blocks tile the ground rectangle without overlap.
            let tiles: Vec<Rect> = l.roads.iter().chain(&l.blocks).copied().collect();
            for (i, a) in tiles.iter().enumerate() {
                for b in &tiles[i + 1..] {
                    prop_assert!(!a.overlaps(b));
                }
            }
            let ground = l.ground_rect();
            let covered: f64 = tiles.iter().map(Rect::area).sum();
            prop_assert!((covered - ground.area()).abs() <= 1e-9 * ground.area());
            prop_assert!(l.validate().is_empty());
        }
    }
}
