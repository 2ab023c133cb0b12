//! Plane quadrics for the quadric error metric.

use core::ops::{Add, AddAssign};

/// Symmetric 4x4 matrix `Q` such that `[p 1] Q [p 1]^T` is a weighted sum of
/// squared point-plane distances. Stored as its upper triangle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadric {
    // aa ab ac ad bb bc bd cc cd dd
    m: [f64; 10],
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("triangle has zero area")]
pub struct DegenerateFace;

impl Quadric {
    /// `w * p p^T` for the plane `ax + by + cz + d = 0`, with `(a, b, c)` unit length.
    pub fn from_plane(normal: [f64; 3], d: f64, weight: f64) -> Self {
        let [a, b, c] = normal;
        let w = weight;
        Self {
            m: [
                w * a * a,
                w * a * b,
                w * a * c,
                w * a * d,
                w * b * b,
                w * b * c,
                w * b * d,
                w * c * c,
                w * c * d,
                w * d * d,
            ],
        }
    }

    pub fn evaluate(&self, p: [f64; 3]) -> f64 {
        let [x, y, z] = p;
        let m = &self.m;
        m[0] * x * x
            + 2.0 * m[1] * x * y
            + 2.0 * m[2] * x * z
            + 2.0 * m[3] * x
            + m[4] * y * y
            + 2.0 * m[5] * y * z
            + 2.0 * m[6] * y
            + m[7] * z * z
            + 2.0 * m[8] * z
            + m[9]
    }

    /// Full 4x4 form.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let m = &self.m;
        [
            [m[0], m[1], m[2], m[3]],
            [m[1], m[4], m[5], m[6]],
            [m[2], m[5], m[7], m[8]],
            [m[3], m[6], m[8], m[9]],
        ]
    }
}

impl Add for Quadric {
    type Output = Quadric;
    fn add(mut self, rhs: Quadric) -> Quadric {
        self += rhs;
        self
    }
}

impl AddAssign for Quadric {
    fn add_assign(&mut self, rhs: Quadric) {
        for (a, b) in self.m.iter_mut().zip(rhs.m) {
            *a += b;
        }
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Unnormalized face normal `(p1 - p0) x (p2 - p0)`; its length is twice the area.
pub fn face_normal(p: [[f64; 3]; 3]) -> [f64; 3] {
    cross(sub(p[1], p[0]), sub(p[2], p[0]))
}

/// Area-weighted plane quadric of a triangle.
pub fn face_quadric(p: [[f64; 3]; 3]) -> Result<Quadric, DegenerateFace> {
    let n = face_normal(p);
    let len = norm(n);
    if len <= f64::EPSILON {
        return Err(DegenerateFace);
    }
    let unit = n.map(|c| c / len);
    Ok(Quadric::from_plane(unit, -dot(unit, p[0]), 0.5 * len))
}

/// Plane through the edge `a -> b` perpendicular to the face with unit normal
/// `face_unit`. Used to pin boundary rims.
pub fn edge_constraint(
    a: [f64; 3],
    b: [f64; 3],
    face_unit: [f64; 3],
    weight: f64,
) -> Option<Quadric> {
    let m = cross(sub(b, a), face_unit);
    let len = norm(m);
    if len <= f64::EPSILON {
        return None;
    }
    let unit = m.map(|c| c / len);
    Some(Quadric::from_plane(unit, -dot(unit, a), weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn right_triangle_in_xy_plane() {
        let q = face_quadric([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let h: f64 = 3.0;
        assert!((q.evaluate([0.0, 0.0, h]) - 0.5 * h * h).abs() < 1e-12);
        assert!((q.evaluate([7.0, -2.0, h]) - 0.5 * h * h).abs() < 1e-12);
        for v in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            assert!(q.evaluate(v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_area_is_rejected() {
        let p = [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        assert_eq!(face_quadric(p), Err(DegenerateFace));
    }

    #[test]
    fn symmetric_and_additive() {
        let a = face_quadric([[0.0, 0.0, 0.0], [3.0, 0.0, 1.0], [0.0, 2.0, 5.0]]).unwrap();
        let b = face_quadric([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let m = (a + b).matrix();
        for (i, row) in m.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, m[j][i]);
            }
        }
        let p = [0.3, -1.2, 2.5];
        assert!(((a + b).evaluate(p) - a.evaluate(p) - b.evaluate(p)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn error_is_area_times_squared_distance(
            p0 in prop::array::uniform3(-10.0f64..10.0),
            p1 in prop::array::uniform3(-10.0f64..10.0),
            p2 in prop::array::uniform3(-10.0f64..10.0),
            x in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let n = face_normal([p0, p1, p2]);
            let len = norm(n);
            prop_assume!(len > 1e-3);
            // Independent route: signed distance along the normalized normal.
            let area = 0.5 * len;
            let dist = dot(n, sub(x, p0)) / len;
            let q = face_quadric([p0, p1, p2]).unwrap();
            let expected = area * dist * dist;
            prop_assert!((q.evaluate(x) - expected).abs() <= 1e-9 * expected.max(1.0));
            prop_assert!(q.evaluate(x) > -1e-9);
        }
    }
}
