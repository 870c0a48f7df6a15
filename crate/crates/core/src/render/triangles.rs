//! Flattens a scene into one world-space triangle list shared by the
//! rasterizer and the ray-cast reference.

use crate::geometry::{RigidTransform, Vec3};
use crate::scene::{semantic_id, ComposedScene, MaterialParams, WaterLayer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SurfaceKind {
    /// Index into [`SceneTriangles::materials`].
    Opaque(usize),
    Water,
}

#[derive(Debug, Clone)]
pub(crate) struct WorldTriangle {
    pub positions: [Vec3; 3],
    pub normals: [Vec3; 3],
    pub instance: u16,
    pub part: u16,
    pub semantic: u16,
    pub kind: SurfaceKind,
}

pub(crate) struct SceneTriangles<'a> {
    pub scene: &'a ComposedScene,
    pub triangles: Vec<WorldTriangle>,
    pub materials: Vec<MaterialParams>,
}

impl<'a> SceneTriangles<'a> {
    /// Instances in scene order, then scenery, then the water patch.
    pub fn build(scene: &'a ComposedScene) -> Self {
        let mut triangles = Vec::new();
        let mut materials = Vec::new();

        let mut push_mesh = |mesh: &crate::mesh::TriangleMesh,
                             pose: &RigidTransform,
                             instance: u16,
                             semantic: u16,
                             material: &MaterialParams,
                             triangles: &mut Vec<WorldTriangle>| {
            let mat = materials.len();
            materials.push(material.clamped());
            let world: Vec<Vec3> = mesh.vertices().iter().map(|&v| pose.apply(v)).collect();
            let normals: Vec<Vec3> = mesh
                .normals()
                .iter()
                .map(|&n| pose.apply_vector(n))
                .collect();
            for (part_index, part) in mesh.parts().iter().enumerate() {
                for tri in part.triangles.clone() {
                    let idx = mesh.triangles()[tri];
                    triangles.push(WorldTriangle {
                        positions: idx.map(|i| world[i as usize]),
                        normals: idx.map(|i| normals[i as usize]),
                        instance,
                        part: part_index as u16,
                        semantic,
                        kind: SurfaceKind::Opaque(mat),
                    });
                }
            }
        };

        for inst in &scene.instances {
            push_mesh(
                &inst.mesh,
                &inst.pose,
                inst.instance_id,
                inst.semantic_class.semantic_id(),
                &inst.material,
                &mut triangles,
            );
        }
        for sc in &scene.scenery {
            push_mesh(
                &sc.mesh,
                &RigidTransform::IDENTITY,
                0,
                sc.class.semantic_id(),
                &sc.material,
                &mut triangles,
            );
        }
        if let Some(water) = &scene.water {
            tessellate_water(water, scene.time, &mut triangles);
        }
        SceneTriangles {
            scene,
            triangles,
            materials,
        }
    }

    /// Shading normal at a hit on triangle `tri` with barycentrics
    /// `(1 − b1 − b2, b1, b2)`, flipped to face `eye`.
    pub fn surface_normal(&self, tri: usize, point: Vec3, b1: f64, b2: f64, eye: Vec3) -> Vec3 {
        let t = &self.triangles[tri];
        if t.kind == SurfaceKind::Water {
            let w = self.scene.water.as_ref().expect("water triangle without water");
            return w.params.wave_normal(point.x, point.y, self.scene.time);
        }
        let [p0, p1, p2] = t.positions;
        let geometric = (p1 - p0).cross(p2 - p0).try_normalized().unwrap_or(Vec3::Z);
        let b0 = 1.0 - b1 - b2;
        let interpolated = (t.normals[0] * b0 + t.normals[1] * b1 + t.normals[2] * b2)
            .try_normalized()
            .unwrap_or(geometric);
        let n = if interpolated.dot(geometric) < 0.0 {
            geometric
        } else {
            interpolated
        };
        if geometric.dot(eye - point) < 0.0 {
            -n
        } else {
            n
        }
    }
}

fn tessellate_water(water: &WaterLayer, time: f64, out: &mut Vec<WorldTriangle>) {
    let n = water.grid_resolution.max(1) as usize;
    let e = water.extent;
    let p = &water.params;
    let grid: Vec<Vec3> = (0..=n)
        .flat_map(|j| {
            (0..=n).map(move |i| {
                let x = e.x0 + (e.x1 - e.x0) * i as f64 / n as f64;
                let y = e.y0 + (e.y1 - e.y0) * j as f64 / n as f64;
                (x, y)
            })
        })
        .map(|(x, y)| Vec3::new(x, y, p.wave_height(x, y, time)))
        .collect();
    let at = |i: usize, j: usize| grid[j * (n + 1) + i];
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            for positions in [[a, b, c], [a, c, d]] {
                out.push(WorldTriangle {
                    positions,
                    normals: [Vec3::Z; 3],
                    instance: water.instance_id,
                    part: 0,
                    semantic: semantic_id::FLOOD,
                    kind: SurfaceKind::Water,
                });
            }
        }
    }
}
