use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use super::layout::UrbanLayout;
use super::randomize::RandomizationRanges;
use super::seed::RngStream;
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Rect, RigidTransform, Vec3};
use crate::mesh::TriangleMesh;
use crate::scene::{MaterialParams, ObjectInstance, SemanticClass};

/// Consecutive failed placement attempts after which placement stops.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone)]
pub struct Asset {
    /// Normalized so the bottom is at z = 0 and the height is `canonical_height`.
    pub mesh: Arc<TriangleMesh>,
    pub semantic_class: SemanticClass,
    pub canonical_height: f64,
}

#[derive(Debug, Clone)]
pub struct AssetCatalog {
    assets: Vec<Asset>,
}

impl AssetCatalog {
    /// Rescales each mesh to its canonical height. Requires at least one car.
    pub fn new(entries: Vec<(TriangleMesh, SemanticClass, f64)>) -> Result<Self> {
        let mut assets = Vec::with_capacity(entries.len());
        for (mesh, class, height) in entries {
            if !(height > 0.0) {
                return Err(Error::Config(format!(
                    "asset canonical_height {height} must be > 0"
                )));
            }
            assets.push(Asset {
                mesh: Arc::new(mesh.normalized_to_height(height)?),
                semantic_class: class,
                canonical_height: height,
            });
        }
        if !assets.iter().any(|a| a.semantic_class == SemanticClass::Car) {
            return Err(Error::Config("asset catalog needs at least one car".into()));
        }
        Ok(AssetCatalog { assets })
    }

    /// Catalog holding only the procedural sedan.
    pub fn builtin(car_height: f64) -> Self {
        AssetCatalog {
            assets: vec![Asset {
                mesh: Arc::new(crate::mesh::builtin_car(car_height)),
                semantic_class: SemanticClass::Car,
                canonical_height: car_height,
            }],
        }
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    fn cars(&self) -> Vec<&Asset> {
        self.assets
            .iter()
            .filter(|a| a.semantic_class == SemanticClass::Car)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub instances: Vec<ObjectInstance>,
    /// Set when placement stopped early because no free spot was found.
    pub saturation: Option<String>,
}

const CAR_PALETTE: [[f64; 3]; 8] = [
    [0.75, 0.08, 0.07],
    [0.08, 0.18, 0.55],
    [0.85, 0.85, 0.85],
    [0.06, 0.06, 0.07],
    [0.45, 0.47, 0.50],
    [0.90, 0.70, 0.10],
    [0.10, 0.40, 0.20],
    [0.55, 0.35, 0.20],
];

/// Places up to `count` cars on the layout's spawn zones with rejection
/// sampling. Cars after the first are centered within `cluster_radius` of it
/// so they share a view. Instance IDs are `1..=n` in placement order. Each car rests on
/// the ground, lies fully inside one spawn zone, and its footprint overlaps
/// neither other cars nor buildings.
pub fn place_objects(
    layout: &UrbanLayout,
    catalog: &AssetCatalog,
    ranges: &RandomizationRanges,
    count: usize,
    stream: &mut RngStream,
) -> Result<Placement> {
    let cars = catalog.cars();
    let zones: Vec<Rect> = layout
        .spawn_zones
        .iter()
        .copied()
        .filter(|z| z.area() > 0.0)
        .collect();
    // (sampling area, zone the footprint must stay in)
    let mut candidates: Vec<(Rect, Rect)> = zones.iter().map(|z| (*z, *z)).collect();

    let mut instances: Vec<ObjectInstance> = Vec::new();
    let mut footprints: Vec<Rect> = Vec::new();
    let mut saturation = None;

    while instances.len() < count {
        if zones.is_empty() || cars.is_empty() {
            saturation = Some(format!(
                "placed 0 of {count} objects: no spawn zones or car assets"
            ));
            break;
        }
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let asset = cars[stream.index(cars.len())];
            // Area-weighted choice of sampling area.
            let total_area: f64 = candidates.iter().map(|(a, _)| a.area()).sum();
            let mut pick = stream.next_unit() * total_area;
            let (area, zone) = *candidates
                .iter()
                .find(|(a, _)| {
                    pick -= a.area();
                    pick < 0.0
                })
                .unwrap_or(candidates.last().expect("non-empty"));
            let x = stream.sample_uniform(area.x0, area.x1)?
                + stream.sample_uniform(ranges.object_jitter_xy.lo, ranges.object_jitter_xy.hi)?;
            let y = stream.sample_uniform(area.y0, area.y1)?
                + stream.sample_uniform(ranges.object_jitter_xy.lo, ranges.object_jitter_xy.hi)?;
            let along = if zone.width() >= zone.height() { 0.0 } else { FRAC_PI_2 };
            let heading = if stream.coin() { along + PI } else { along };
            let yaw = heading
                + stream
                    .sample_uniform(ranges.object_yaw.lo, ranges.object_yaw.hi)?
                    .to_radians();

            let rotation = Mat3::rotation_z(yaw);
            let rotated = asset
                .mesh
                .object_aabb()
                .transformed(&RigidTransform::new(rotation, Vec3::ZERO));
            let pose = RigidTransform::new(
                rotation,
                Vec3::new(x, y, layout.ground_height - rotated.min.z),
            );
            let footprint = asset.mesh.object_aabb().transformed(&pose).footprint();

            let fits = zone.contains_rect(&footprint)
                && !footprints.iter().any(|f| f.overlaps(&footprint))
                && !layout.buildings.iter().any(|b| b.footprint.overlaps(&footprint));
            if !fits {
                continue;
            }

            let base = CAR_PALETTE[stream.index(CAR_PALETTE.len())];
            let tint = stream.sample_uniform(0.85, 1.1)?;
            let material = MaterialParams {
                base_color: base.map(|c| (c * tint).clamp(0.0, 1.0)),
                roughness: stream.sample_uniform(0.15, 0.6)?,
                opacity: 1.0,
                specular: stream.sample_uniform(0.3, 0.9)?,
                texture: None,
            };
            instances.push(ObjectInstance {
                instance_id: (instances.len() + 1) as u16,
                semantic_class: SemanticClass::Car,
                mesh: Arc::clone(&asset.mesh),
                pose,
                material,
            });
            footprints.push(footprint);
            if instances.len() == 1 {
                let near = Rect::new(x, y, x, y).expanded(ranges.cluster_radius);
                candidates = zones.iter().filter_map(|z| z.intersection(&near).map(|a| (a, *z))).collect();
            }
            placed = true;
            break;
        }
        if !placed {
            saturation = Some(format!(
                "placed {} of {count} objects: {MAX_PLACEMENT_ATTEMPTS} consecutive attempts failed",
                instances.len()
            ));
            break;
        }
    }
    Ok(Placement {
        instances,
        saturation,
    })
}
