//! Small fixed-size linear algebra used throughout the crate.
//!
//! World frame is z-up and right-handed. Camera frame is x-right, y-down,
//! z-forward. All quantities are meters unless stated otherwise.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near-)zero vector.
    pub fn try_normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-300 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn normalized(self) -> Vec3 {
        self.try_normalized().unwrap_or(Vec3::ZERO)
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        self.into()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        Mat3([r0.to_array(), r1.to_array(), r2.to_array()])
    }

    /// Rotation by `angle` radians about the world z axis.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Rotation about a unit axis (Rodrigues).
    pub fn rotation_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Mat3([
            [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
            [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
            [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
        ])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from(self.0[i])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> f64 {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose().mul_mat(self);
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((p.0[i][j] - target).abs());
            }
        }
        err
    }
}

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Mat3::IDENTITY,
        translation: Vec3::ZERO,
    };

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform::new(Mat3::IDENTITY, t)
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.mul_vec(v)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation.0;
        let t = self.translation;
        [
            [r[0][0], r[0][1], r[0][2], t.x],
            [r[1][0], r[1][1], r[1][2], t.y],
            [r[2][0], r[2][1], r[2][2], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    /// Whether the rotation is orthonormal with determinant +1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.translation.is_finite()
            && self.rotation.orthonormality_error() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Rotation angle about world z, assuming the rotation is a pure yaw.
    pub fn yaw(&self) -> f64 {
        let r = &self.rotation.0;
        r[1][0].atan2(r[0][0])
    }
}

/// Axis-aligned bounding box stored as componentwise min/max.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Aabb::new(first, first), |b, p| {
            Aabb::new(b.min.min(p), b.max.max(p))
        }))
    }

    pub fn is_ordered(&self) -> bool {
        self.min.x <= self.max.x && self.min.y <= self.max.y && self.min.z <= self.max.z
    }

    /// The 8 corners; bit 0 selects x, bit 1 y, bit 2 z (0 = min, 1 = max).
    pub fn corners(&self) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            Vec3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            )
        })
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    /// Componentwise bounds of the 8 corners after applying `t`.
    pub fn transformed(&self, t: &RigidTransform) -> Aabb {
        Aabb::from_points(self.corners().into_iter().map(|c| t.apply(c)))
            .expect("eight corners")
    }

    pub fn footprint(&self) -> Rect {
        Rect::new(self.min.x, self.min.y, self.max.x, self.max.y)
    }
}

/// Axis-aligned rectangle on the ground plane, `x0 ≤ x1`, `y0 ≤ y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_ordered(&self) -> bool {
        self.x0 <= self.x1 && self.y0 <= self.y1
    }

    /// Interiors overlap; rectangles that only share an edge do not.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.x0 <= o.x0 && o.x1 <= self.x1 && self.y0 <= o.y0 && o.y1 <= self.y1
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn intersection(&self, o: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.x0.max(o.x0),
            self.y0.max(o.y0),
            self.x1.min(o.x1),
            self.y1.min(o.y1),
        );
        (r.x0 < r.x1 && r.y0 < r.y1).then_some(r)
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect::new(
            self.x0 - margin,
            self.y0 - margin,
            self.x1 + margin,
            self.y1 + margin,
        )
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect::new(
            self.x0.min(o.x0),
            self.y0.min(o.y0),
            self.x1.max(o.x1),
            self.y1.max(o.y1),
        )
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) * 0.5, (self.y0 + self.y1) * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat4_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            prop::array::uniform3(-1.0f64..1.0),
            -10.0f64..10.0,
            prop::array::uniform3(-50.0f64..50.0),
        )
            .prop_filter_map("non-degenerate axis", |(axis, angle, t)| {
                let axis = Vec3::from(axis).try_normalized()?;
                (axis.norm() > 0.5).then(|| {
                    RigidTransform::new(Mat3::rotation_axis_angle(axis, angle), Vec3::from(t))
                })
            })
    }

    fn assert_transform_close(a: &RigidTransform, b: &RigidTransform, tol: f64) {
        let (ha, hb) = (a.to_homogeneous(), b.to_homogeneous());
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (ha[i][j] - hb[i][j]).abs() <= tol,
                    "entry ({i},{j}): {} vs {}",
                    ha[i][j],
                    hb[i][j]
                );
            }
        }
    }

    #[test]
    fn identity_composition() {
        let t = RigidTransform::new(Mat3::rotation_z(0.7), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(RigidTransform::IDENTITY.compose(&t), t);
    }

    #[test]
    fn inverse_composition_is_identity() {
        let t = RigidTransform::new(
            Mat3::rotation_axis_angle(Vec3::new(1.0, 2.0, -0.5), 1.3),
            Vec3::new(-4.0, 2.5, 9.0),
        );
        assert_transform_close(&t.compose(&t.inverse()), &RigidTransform::IDENTITY, 1e-9);
    }

    #[test]
    fn unit_cube_under_identity_and_quarter_turn() {
        let cube = Aabb::new(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(cube.transformed(&RigidTransform::IDENTITY), cube);
        let turned = cube.transformed(&RigidTransform::new(
            Mat3::rotation_z(std::f64::consts::FRAC_PI_2),
            Vec3::ZERO,
        ));
        for i in 0..3 {
            assert!((turned.min[i] - cube.min[i]).abs() < 1e-9);
            assert!((turned.max[i] - cube.max[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rect_overlap_is_open() {
        let a = Rect::new(0.0, 0.0, 1.0, 1.0);
        assert!(!a.overlaps(&Rect::new(1.0, 0.0, 2.0, 1.0)));
        assert!(a.overlaps(&Rect::new(0.5, 0.5, 2.0, 2.0)));
    }

    proptest! {
        #[test]
        fn compose_matches_homogeneous_product(a in arb_transform(), b in arb_transform()) {
            let expected = mat4_mul(&a.to_homogeneous(), &b.to_homogeneous());
            let got = a.compose(&b).to_homogeneous();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((got[i][j] - expected[i][j]).abs() <= 1e-9);
                }
            }
            prop_assert!(a.compose(&b).is_valid(1e-9));
        }

        #[test]
        fn compose_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            let (hl, hr) = (left.to_homogeneous(), right.to_homogeneous());
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((hl[i][j] - hr[i][j]).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn transformed_box_equals_corner_scan(
            lo in prop::array::uniform3(-5.0f64..5.0),
            ext in prop::array::uniform3(0.0f64..4.0),
            t in arb_transform(),
        ) {
            let lo = Vec3::from(lo);
            let b = Aabb::new(lo, lo + Vec3::from(ext));
            let out = b.transformed(&t);
            // Corner scan written out longhand, independent of Aabb::corners.
            let mut mn = [f64::INFINITY; 3];
            let mut mx = [f64::NEG_INFINITY; 3];
            for &x in &[b.min.x, b.max.x] {
                for &y in &[b.min.y, b.max.y] {
                    for &z in &[b.min.z, b.max.z] {
                        let h = t.to_homogeneous();
                        for i in 0..3 {
                            let v = h[i][0] * x + h[i][1] * y + h[i][2] * z + h[i][3];
                            mn[i] = mn[i].min(v);
                            mx[i] = mx[i].max(v);
                            prop_assert!(out.min[i] <= t.apply(Vec3::new(x, y, z))[i]);
                            prop_assert!(out.max[i] >= t.apply(Vec3::new(x, y, z))[i]);
                        }
                    }
                }
            }
            for i in 0..3 {
                prop_assert!((out.min[i] - mn[i]).abs() <= 1e-9);
                prop_assert!((out.max[i] - mx[i]).abs() <= 1e-9);
            }
        }
    }
}
