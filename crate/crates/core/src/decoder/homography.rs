//! Four-point perspective transform.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::segments::Point2;

/// 3x3 projective map, scaled so that `h33 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Wraps a matrix, rescaling it so the bottom-right entry is 1 when that
    /// entry is not (numerically) zero.
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        let s = m[(2, 2)];
        let m = if s.abs() > 1e-15 { m / s } else { m };
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, p: Point2) -> Option<Point2> {
        let v = self.m * Vector3::new(p.x, p.y, 1.0);
        (v.z.abs() > 1e-12).then(|| Point2::new(v.x / v.z, v.y / v.z))
    }

    pub fn inverse(&self) -> Option<Homography> {
        self.m.try_inverse().map(Self::from_matrix)
    }
}

fn normalizing_transform(pts: &[Point2; 4]) -> Matrix3<f64> {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean_dist = pts.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / 4.0;
    let s = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: Point2) -> Point2 {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Point2::new(v.x / v.z, v.y / v.z)
}

/// Twice the signed area of triangle `abc`.
fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// True if some three of the points are (nearly) collinear, relative to the
/// spread of the points.
pub fn has_collinear_triple(pts: &[Point2; 4]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| a.dist(*b)))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    let tol = 1e-9 * scale * scale;
    (0..4).any(|skip| {
        let t: Vec<Point2> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
        cross(t[0], t[1], t[2]).abs() <= tol
    })
}

/// Homography with `H * src[k] ≃ dst[k]`, via the normalized direct linear
/// transform with `h33` fixed to 1. Rejects degenerate configurations.
pub fn compute_homography(src: &[Point2; 4], dst: &[Point2; 4]) -> Option<Homography> {
    if has_collinear_triple(src) || has_collinear_triple(dst) {
        return None;
    }
    let ts = normalizing_transform(src);
    let td = normalizing_transform(dst);
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for k in 0..4 {
        let p = transform(&ts, src[k]);
        let q = transform(&td, dst[k]);
        let (r0, r1) = (2 * k, 2 * k + 1);
        a[(r0, 0)] = p.x;
        a[(r0, 1)] = p.y;
        a[(r0, 2)] = 1.0;
        a[(r0, 6)] = -p.x * q.x;
        a[(r0, 7)] = -p.y * q.x;
        b[r0] = q.x;
        a[(r1, 3)] = p.x;
        a[(r1, 4)] = p.y;
        a[(r1, 5)] = 1.0;
        a[(r1, 6)] = -p.x * q.y;
        a[(r1, 7)] = -p.y * q.y;
        b[r1] = q.y;
    }
    let h = a.lu().solve(&b)?;
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    let full = td.try_inverse()? * hn * ts;
    let out = Homography::from_matrix(full);
    out.inverse()?;
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(s: f64) -> [Point2; 4] {
        [
            Point2::new(0.0, 0.0),
            Point2::new(s, 0.0),
            Point2::new(s, s),
            Point2::new(0.0, s),
        ]
    }

    #[test]
    fn identity_for_equal_quads() {
        let h = compute_homography(&square(1.0), &square(1.0)).unwrap();
        assert!((h.matrix() - Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn translation() {
        let dst = square(1.0).map(|p| p + Point2::new(5.0, 7.0));
        let h = compute_homography(&square(1.0), &dst).unwrap();
        let expect = Matrix3::new(1.0, 0.0, 5.0, 0.0, 1.0, 7.0, 0.0, 0.0, 1.0);
        assert!((h.matrix() - expect).abs().max() < 1e-12);
    }

    #[test]
    fn maps_corners_of_a_perspective_quad() {
        let src = [
            Point2::new(10.0, 12.0),
            Point2::new(70.0, 5.0),
            Point2::new(80.0, 90.0),
            Point2::new(3.0, 60.0),
        ];
        let dst = square(159.0);
        let h = compute_homography(&src, &dst).unwrap();
        for k in 0..4 {
            assert!(h.apply(src[k]).unwrap().dist(dst[k]) < 1e-9);
        }
    }

    #[test]
    fn rejects_collinear() {
        let src = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
            Point2::new(0.0, 5.0),
        ];
        assert!(compute_homography(&src, &square(1.0)).is_none());
    }
}
