//! Triangle meshes, a strict Wavefront OBJ subset reader, and a few built-in
//! primitives used when no external assets are supplied.

use std::collections::HashMap;
use std::io::BufRead;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

/// Named contiguous run of triangles; the index into `parts` is the part index
/// written to the fine-grained segmentation buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPart {
    pub name: String,
    pub triangles: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    normals: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    parts: Vec<MeshPart>,
    object_aabb: Aabb,
}

impl TriangleMesh {
    /// Builds a mesh and checks every invariant. `normals` may be empty, in
    /// which case area-weighted vertex normals are computed from the faces.
    pub fn new(
        vertices: Vec<Vec3>,
        normals: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        parts: Vec<MeshPart>,
    ) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(t) = triangles
            .iter()
            .find(|t| t.iter().any(|&i| i as usize >= vertices.len()))
        {
            return Err(Error::Domain(format!(
                "triangle {t:?} references a vertex beyond {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite vertex".into()));
        }
        let parts = if parts.is_empty() {
            vec![MeshPart {
                name: "default".into(),
                triangles: 0..triangles.len(),
            }]
        } else {
            parts
        };
        let mut cursor = 0;
        for p in &parts {
            if p.triangles.start != cursor || p.triangles.end <= p.triangles.start {
                return Err(Error::Domain(format!(
                    "part '{}' does not continue the partition at triangle {cursor}",
                    p.name
                )));
            }
            cursor = p.triangles.end;
        }
        if cursor != triangles.len() {
            return Err(Error::Domain("parts do not cover every triangle".into()));
        }
        if parts.len() > 256 {
            return Err(Error::Domain(format!(
                "{} parts exceed the 256-part limit",
                parts.len()
            )));
        }

        let normals = if normals.is_empty() {
            vertex_normals(&vertices, &triangles)
        } else if normals.len() != vertices.len() {
            return Err(Error::Domain("normal count differs from vertex count".into()));
        } else {
            normals
                .into_iter()
                .map(|n| n.try_normalized().unwrap_or(Vec3::Z))
                .collect()
        };
        let object_aabb = Aabb::from_points(vertices.iter().copied()).expect("non-empty");
        Ok(TriangleMesh {
            vertices,
            normals,
            triangles,
            parts,
            object_aabb,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn parts(&self) -> &[MeshPart] {
        &self.parts
    }

    pub fn object_aabb(&self) -> Aabb {
        self.object_aabb
    }

    pub fn triangle_positions(&self, tri: usize) -> [Vec3; 3] {
        self.triangles[tri].map(|i| self.vertices[i as usize])
    }

    /// Part index of triangle `tri`.
    pub fn part_of(&self, tri: usize) -> usize {
        self.parts
            .partition_point(|p| p.triangles.end <= tri)
            .min(self.parts.len() - 1)
    }

    /// Uniformly rescales the mesh so its vertical extent equals `height`, then
    /// shifts it so the bottom sits at z = 0 and the footprint is centered.
    pub fn normalized_to_height(&self, height: f64) -> Result<TriangleMesh> {
        let size = self.object_aabb.size();
        if size.z <= 0.0 || height <= 0.0 {
            return Err(Error::Domain(format!(
                "cannot scale a mesh of height {} to {height}",
                size.z
            )));
        }
        let s = height / size.z;
        let c = self.object_aabb.center();
        let offset = Vec3::new(c.x, c.y, self.object_aabb.min.z);
        let vertices = self.vertices.iter().map(|&v| (v - offset) * s).collect();
        TriangleMesh::new(
            vertices,
            self.normals.clone(),
            self.triangles.clone(),
            self.parts.clone(),
        )
    }
}

fn vertex_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::ZERO; vertices.len()];
    for t in triangles {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        // Unnormalized cross product weights by area.
        let n = (b - a).cross(c - a);
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalized().unwrap_or(Vec3::Z))
        .collect()
}

/// Reads the supported OBJ subset: `v`, `vn`, triangular `f` (with `v`,
/// `v/vt`, `v//vn` or `v/vt/vn` references, negative indices allowed), and
/// `o`/`g` records delimiting parts. `vt`, `s`, `usemtl` and `mtllib` records
/// are accepted and ignored. Faces with more than three vertices are rejected.
pub fn load_mesh_obj<R: BufRead>(reader: R) -> Result<TriangleMesh> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut file_normals: Vec<Vec3> = Vec::new();

    // Output vertices are unique (position, normal) pairs.
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut vertex_normal: Vec<Option<usize>> = Vec::new();
    let mut dedup: HashMap<(usize, Option<usize>), u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut parts: Vec<MeshPart> = Vec::new();
    let mut current_part = String::from("default");
    let mut part_start = 0usize;

    let close_part = |parts: &mut Vec<MeshPart>, name: &str, start: usize, end: usize| {
        if end > start {
            parts.push(MeshPart {
                name: name.to_string(),
                triangles: start..end,
            });
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::ObjParse {
            line: lineno,
            message: format!("unreadable line ({e})"),
        })?;
        let line = line.trim_end_matches('\r');
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().expect("non-empty line");
        let fields: Vec<&str> = tokens.collect();
        let err = |message: String| Error::ObjParse {
            line: lineno,
            message,
        };
        match keyword {
            "v" | "vn" => {
                if fields.len() < 3 || (keyword == "vn" && fields.len() != 3) || fields.len() > 4 {
                    return Err(err(format!("expected 3 coordinates in '{keyword}' record")));
                }
                let mut xyz = [0.0; 3];
                for (slot, f) in xyz.iter_mut().zip(&fields) {
                    *slot = f
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(format!("invalid number '{f}'")))?;
                }
                if keyword == "v" {
                    positions.push(Vec3::from(xyz));
                } else {
                    file_normals.push(Vec3::from(xyz));
                }
            }
            "f" => {
                if fields.len() != 3 {
                    return Err(err("non-triangle face".into()));
                }
                let mut tri = [0u32; 3];
                for (slot, f) in tri.iter_mut().zip(&fields) {
                    let (p, n) = parse_face_ref(f, positions.len(), file_normals.len())
                        .map_err(err)?;
                    let next = vertices.len() as u32;
                    *slot = *dedup.entry((p, n)).or_insert_with(|| {
                        vertices.push(positions[p]);
                        vertex_normal.push(n);
                        next
                    });
                }
                triangles.push(tri);
            }
            "o" | "g" => {
                close_part(&mut parts, &current_part, part_start, triangles.len());
                part_start = triangles.len();
                current_part = if fields.is_empty() {
                    format!("part{}", parts.len())
                } else {
                    fields.join(" ")
                };
            }
            "vt" | "s" | "usemtl" | "mtllib" => {}
            other => return Err(err(format!("unsupported record '{other}'"))),
        }
    }
    close_part(&mut parts, &current_part, part_start, triangles.len());

    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let normals = if vertex_normal.iter().all(Option::is_some) {
        vertex_normal
            .iter()
            .map(|n| file_normals[n.expect("checked")])
            .collect()
    } else {
        Vec::new()
    };
    TriangleMesh::new(vertices, normals, triangles, parts)
}

fn parse_face_ref(
    field: &str,
    n_positions: usize,
    n_normals: usize,
) -> std::result::Result<(usize, Option<usize>), String> {
    let mut it = field.split('/');
    let resolve = |s: &str, count: usize, what: &str| -> std::result::Result<usize, String> {
        let i: i64 = s
            .parse()
            .map_err(|_| format!("invalid {what} index '{s}'"))?;
        let resolved = match i {
            0 => None,
            i if i > 0 => Some(i as usize - 1),
            i => (count as i64 + i).try_into().ok(),
        };
        resolved
            .filter(|&r| r < count)
            .ok_or_else(|| format!("{what} index {i} out of range"))
    };
    let p = resolve(it.next().unwrap_or(""), n_positions, "vertex")?;
    let _uv = it.next();
    let n = match it.next() {
        Some(s) if !s.is_empty() => Some(resolve(s, n_normals, "normal")?),
        _ => None,
    };
    if it.next().is_some() {
        return Err(format!("malformed face reference '{field}'"));
    }
    Ok((p, n))
}

/// Closed axis-aligned box with per-face vertices so vertex normals equal face
/// normals. Winding is counter-clockwise seen from outside.
pub fn box_faces(min: Vec3, max: Vec3, include_bottom: bool) -> (Vec<Vec3>, Vec<Vec3>, Vec<[u32; 3]>) {
    let c = Aabb::new(min, max).corners();
    // (normal, four corner indices counter-clockwise from outside)
    let faces: [(Vec3, [usize; 4]); 6] = [
        (Vec3::Z, [4, 5, 7, 6]),
        (-Vec3::Z, [0, 2, 3, 1]),
        (Vec3::X, [1, 3, 7, 5]),
        (-Vec3::X, [0, 4, 6, 2]),
        (Vec3::Y, [2, 6, 7, 3]),
        (-Vec3::Y, [0, 1, 5, 4]),
    ];
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    for (n, quad) in faces {
        if n == -Vec3::Z && !include_bottom {
            continue;
        }
        let base = vertices.len() as u32;
        for i in quad {
            vertices.push(c[i]);
            normals.push(n);
        }
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    (vertices, normals, triangles)
}

/// Single-part box mesh.
pub fn box_mesh(min: Vec3, max: Vec3, include_bottom: bool) -> TriangleMesh {
    let (v, n, t) = box_faces(min, max, include_bottom);
    TriangleMesh::new(v, n, t, Vec::new()).expect("box is a valid mesh")
}

/// Procedural sedan: body, cabin and four wheels as separate parts. Length
/// runs along object x. The bottom sits at z = 0 and the total height is
/// `height`; the footprint is centered on the origin.
pub fn builtin_car(height: f64) -> TriangleMesh {
    let s = height / 1.5;
    let (l, w) = (4.4 * s, 1.8 * s);
    let mut boxes: Vec<(&str, Vec<(Vec3, Vec3)>)> = vec![
        (
            "body",
            vec![(
                Vec3::new(-l / 2.0, -w / 2.0, 0.3 * s),
                Vec3::new(l / 2.0, w / 2.0, 0.9 * s),
            )],
        ),
        (
            "cabin",
            vec![(
                Vec3::new(-1.2 * s, -0.8 * s, 0.9 * s),
                Vec3::new(1.0 * s, 0.8 * s, height),
            )],
        ),
    ];
    let wheel = |cx: f64, cy: f64| {
        (
            Vec3::new(cx - 0.35 * s, cy - 0.12 * s, 0.0),
            Vec3::new(cx + 0.35 * s, cy + 0.12 * s, 0.6 * s),
        )
    };
    let (wx, wy) = (1.4 * s, w / 2.0 - 0.12 * s);
    boxes.push((
        "wheels",
        vec![wheel(wx, wy), wheel(wx, -wy), wheel(-wx, wy), wheel(-wx, -wy)],
    ));

    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    let mut parts = Vec::new();
    for (name, list) in boxes {
        let start = triangles.len();
        for (mn, mx) in list {
            let (v, n, t) = box_faces(mn, mx, true);
            let base = vertices.len() as u32;
            vertices.extend(v);
            normals.extend(n);
            triangles.extend(t.into_iter().map(|t| t.map(|i| i + base)));
        }
        parts.push(MeshPart {
            name: name.into(),
            triangles: start..triangles.len(),
        });
    }
    TriangleMesh::new(vertices, normals, triangles, parts).expect("car is a valid mesh")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(s: &str) -> Result<TriangleMesh> {
        load_mesh_obj(s.as_bytes())
    }

    const CUBE: &str = "\
v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5
f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8
";

    #[test]
    fn single_triangle() {
        let m = load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.triangles().len(), 1);
        assert_eq!(m.parts().len(), 1);
        assert_eq!(m.parts()[0].triangles, 0..1);
        // Counter-clockwise in xy: computed normal is +z.
        assert_eq!(m.normals()[0], Vec3::Z);
    }

    #[test]
    fn cube_bounds() {
        let m = load(CUBE).unwrap();
        assert_eq!(m.triangles().len(), 12);
        assert_eq!(m.object_aabb(), Aabb::new(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)));
    }

    #[test]
    fn quad_face_is_rejected_with_line() {
        let e = load("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert_eq!(e.to_string(), "non-triangle face at line 5");
    }

    #[test]
    fn empty_and_malformed() {
        assert!(matches!(load("# nothing\n"), Err(Error::EmptyMesh)));
        assert!(matches!(load("v 0 0 0\n"), Err(Error::EmptyMesh)));
        let e = load("v 0 0 zero\n").unwrap_err();
        assert!(matches!(e, Error::ObjParse { line: 1, .. }), "{e}");
        let e = load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap_err();
        assert!(matches!(e, Error::ObjParse { line: 4, .. }), "{e}");
        let e = load("v 0 0 0\ncurv 1 2\n").unwrap_err();
        assert!(matches!(e, Error::ObjParse { line: 2, .. }), "{e}");
    }

    #[test]
    fn crlf_normals_negative_indices_and_parts() {
        let src = "v 0 0 0\r\nv 1 0 0\r\nv 0 1 0\r\nv 1 1 0\r\nvn 0 0 2\r\n\
                   o body\r\nf 1//1 2//1 3//1\r\ng roof\r\nf -3//-1 -1//-1 -2//-1\r\n";
        let m = load(src).unwrap();
        assert_eq!(m.parts().len(), 2);
        assert_eq!(m.parts()[0].name, "body");
        assert_eq!(m.parts()[1].triangles, 1..2);
        assert!(m.normals().iter().all(|&n| n == Vec3::Z));
        assert_eq!(m.part_of(0), 0);
        assert_eq!(m.part_of(1), 1);
    }

    #[test]
    fn empty_groups_do_not_create_parts() {
        let m = load("o a\no b\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\ng c\n").unwrap();
        assert_eq!(m.parts().len(), 1);
        assert_eq!(m.parts()[0].name, "b");
    }

    #[test]
    fn builtin_car_is_canonical() {
        let car = builtin_car(1.5);
        let b = car.object_aabb();
        assert!((b.min.z).abs() < 1e-12 && (b.max.z - 1.5).abs() < 1e-12);
        assert_eq!(car.parts().len(), 3);
        let scaled = car.normalized_to_height(2.0).unwrap();
        assert!((scaled.object_aabb().size().z - 2.0).abs() < 1e-12);
    }

    fn check_invariants(m: &TriangleMesh) {
        let nv = m.vertices().len();
        assert!(m.triangles().iter().flatten().all(|&i| (i as usize) < nv));
        let mut cursor = 0;
        for p in m.parts() {
            assert_eq!(p.triangles.start, cursor);
            cursor = p.triangles.end;
        }
        assert_eq!(cursor, m.triangles().len());
        assert!(m.vertices().iter().all(|&v| m.object_aabb().contains_point(v)));
        assert!(m.normals().iter().all(|n| (n.norm() - 1.0).abs() < 1e-9));
    }

    #[derive(Debug, Clone)]
    enum Rec {
        V([i16; 3]),
        F([i8; 3]),
        Group,
        Comment,
    }

    proptest! {
        #[test]
        fn fuzzed_obj_yields_mesh_or_positioned_error(
            recs in prop::collection::vec(prop_oneof![
                4 => prop::array::uniform3(any::<i16>()).prop_map(Rec::V),
                4 => prop::array::uniform3(-6i8..12).prop_map(Rec::F),
                1 => Just(Rec::Group),
                1 => Just(Rec::Comment),
            ], 0..40)
        ) {
            let mut src = String::new();
            for r in &recs {
                match r {
                    Rec::V(v) => src += &format!("v {} {} {}\n", v[0], v[1], v[2]),
                    Rec::F(f) => src += &format!("f {} {} {}\n", f[0], f[1], f[2]),
                    Rec::Group => src += "g part\n",
                    Rec::Comment => src += "# hi\n",
                }
            }
            match load(&src) {
                Ok(m) => check_invariants(&m),
                Err(Error::ObjParse { line, .. }) => prop_assert!(line >= 1 && line <= recs.len()),
                Err(Error::EmptyMesh) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
