//! Planar points, vectors and segment predicates used by the mesher and the
//! growth logic.

use serde::{Deserialize, Serialize};

/// A point (or displacement) in the model plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn add(&self, v: Point) -> Point {
        Point::new(self.x + v.x, self.y + v.y)
    }

    pub fn sub(&self, v: Point) -> Point {
        Point::new(self.x - v.x, self.y - v.y)
    }

    pub fn scale(&self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(&self, v: Point) -> f64 {
        self.x * v.x + self.y * v.y
    }

    /// z-component of the cross product `self × v`.
    pub fn cross(&self, v: Point) -> f64 {
        self.x * v.y - self.y * v.x
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn normalized(&self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotate by +90 degrees (counterclockwise).
    pub fn rot90(&self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn rotate(&self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(&self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn midpoint(&self, other: Point) -> Point {
        self.lerp(other, 0.5)
    }
}

/// Orientation of the triple (a, b, c): positive for counterclockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.lerp(b, t))
}

/// Intersection of segments `[p0, p1]` and `[q0, q1]`.
///
/// Returns the parameters `(t, u)` along each segment and the intersection
/// point, for a proper (non-parallel) crossing with both parameters in
/// `[0, 1]` up to `eps` in parameter space.
pub fn segment_intersection(
    p0: Point,
    p1: Point,
    q0: Point,
    q1: Point,
    eps: f64,
) -> Option<(f64, f64, Point)> {
    let r = p1.sub(p0);
    let s = q1.sub(q0);
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();
    if denom.abs() <= 1e-14 * scale.max(1e-300) {
        return None; // parallel or degenerate
    }
    let qp = q0.sub(p0);
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps {
        Some((t, u, p0.add(r.scale(t))))
    } else {
        None
    }
}

/// True when segments `[p0, p1]` and `[q0, q1]` properly cross (intersection
/// interior to both, away from shared endpoints).
pub fn segments_cross(p0: Point, p1: Point, q0: Point, q1: Point, eps: f64) -> bool {
    match segment_intersection(p0, p1, q0, q1, 0.0) {
        Some((t, u, _)) => t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps,
        None => false,
    }
}

/// Signed area of a polygon (positive for counterclockwise orientation).
pub fn polygon_signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p.cross(q);
    }
    0.5 * a
}

/// Even-odd point-in-polygon test.
pub fn polygon_contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Minimum distance from `p` to the polygon boundary.
pub fn polygon_boundary_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        d = d.min(point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    d
}

/// True when the closed polygon has no self-intersections (and no repeated
/// consecutive vertices).
pub fn polygon_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if poly[i].distance(poly[(i + 1) % n]) == 0.0 {
            return false;
        }
    }
    for i in 0..n {
        let (a0, a1) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue; // adjacent edges share a vertex
            }
            if segments_cross(a0, a1, poly[j], poly[(j + 1) % n], 1e-12) {
                return false;
            }
            // Non-adjacent edges touching is also a degeneracy.
            if segment_intersection(a0, a1, poly[j], poly[(j + 1) % n], 1e-12).is_some() {
                return false;
            }
        }
    }
    true
}

/// True when the open polyline has no self-intersections.
pub fn polyline_is_simple(pts: &[Point]) -> bool {
    let m = pts.len();
    if m < 2 {
        return false;
    }
    for i in 0..m - 1 {
        if pts[i].distance(pts[i + 1]) == 0.0 {
            return false;
        }
    }
    for i in 0..m - 1 {
        for j in i + 2..m - 1 {
            if segment_intersection(pts[i], pts[i + 1], pts[j], pts[j + 1], 1e-12).is_some() {
                // Consecutive segments share a vertex and are skipped by j >= i+2,
                // so any hit here is a true self-intersection.
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn segment_intersection_proper_crossing() {
        let (t, u, p) = segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
            0.0,
        )
        .unwrap();
        assert_relative_eq!(t, 0.5);
        assert_relative_eq!(u, 0.5);
        assert_relative_eq!(p.x, 0.5);
        assert_relative_eq!(p.y, 0.5);
    }

    #[test]
    fn segment_intersection_disjoint_and_parallel() {
        assert!(segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            1e-9,
        )
        .is_none());
        assert!(segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(3.0, 2.0),
            1e-9,
        )
        .is_none());
    }

    #[test]
    fn polygon_predicates() {
        let square = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(polygon_is_simple(&square));
        assert_relative_eq!(polygon_signed_area(&square), 1.0);
        assert!(polygon_contains(&square, Point::new(0.5, 0.5)));
        assert!(!polygon_contains(&square, Point::new(1.5, 0.5)));
        assert_relative_eq!(polygon_boundary_distance(&square, Point::new(0.5, 0.25)), 0.25);

        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(!polygon_is_simple(&bowtie));
    }

    #[test]
    fn rotation_and_cross_conventions() {
        let e1 = Point::new(1.0, 0.0);
        let n = e1.rot90();
        assert_relative_eq!(n.x, 0.0);
        assert_relative_eq!(n.y, 1.0);
        assert!(e1.cross(n) > 0.0);
        let r = e1.rotate(std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(r.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.y, 1.0);
    }
}
