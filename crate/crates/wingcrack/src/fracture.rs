//! Fracture polylines and the fracture network.
//!
//! A fracture is an open polyline with two faces and up to two active tips.
//! Geometry is the authoritative representation: meshes are derived from it
//! and rebuilt whenever it changes.

use crate::error::Error;
use crate::geometry::{
    point_segment_distance, polygon_boundary_distance, polygon_contains, polyline_is_simple,
    segment_intersection, Point,
};
use crate::Result;

/// Identifies one end of a fracture polyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TipEnd {
    /// First polyline vertex.
    A,
    /// Last polyline vertex.
    B,
}

impl TipEnd {
    pub const BOTH: [TipEnd; 2] = [TipEnd::A, TipEnd::B];
}

/// Reference to a tip: fracture index plus end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TipId {
    pub fracture: usize,
    pub end: TipEnd,
}

impl std::fmt::Display for TipId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let end = match self.end {
            TipEnd::A => 'a',
            TipEnd::B => 'b',
        };
        write!(f, "{}{}", self.fracture, end)
    }
}

/// A single fracture: ordered vertices, activity of both tips, and Coulomb
/// parameters of its faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FracturePolyline {
    pub vertices: Vec<Point>,
    /// False once the tip arrested or terminates on the boundary or another
    /// fracture.
    pub tip_a_active: bool,
    pub tip_b_active: bool,
    pub friction_mu: f64,
    pub cohesion_c: f64,
}

impl FracturePolyline {
    pub fn segment(vertices: Vec<Point>, friction_mu: f64, cohesion_c: f64) -> Self {
        FracturePolyline {
            vertices,
            tip_a_active: true,
            tip_b_active: true,
            friction_mu,
            cohesion_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 2 {
            return Err(Error::Geometry("fracture needs at least 2 vertices".into()));
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("fracture has non-finite vertex".into()));
        }
        for w in self.vertices.windows(2) {
            if w[0].distance(w[1]) == 0.0 {
                return Err(Error::Geometry(
                    "fracture has repeated consecutive vertices".into(),
                ));
            }
        }
        if !polyline_is_simple(&self.vertices) {
            return Err(Error::Geometry("fracture polyline self-intersects".into()));
        }
        if self.friction_mu < 0.0 {
            return Err(Error::Geometry("friction coefficient must be >= 0".into()));
        }
        if self.cohesion_c < 0.0 {
            return Err(Error::Geometry("cohesion must be >= 0".into()));
        }
        Ok(())
    }

    pub fn tip_vertex(&self, end: TipEnd) -> Point {
        match end {
            TipEnd::A => self.vertices[0],
            TipEnd::B => *self.vertices.last().unwrap(),
        }
    }

    /// Unit vector pointing from the vertex behind the tip towards the tip,
    /// i.e. into the material ahead of the crack.
    pub fn tip_tangent(&self, end: TipEnd) -> Point {
        match end {
            TipEnd::A => self.vertices[0].sub(self.vertices[1]).normalized(),
            TipEnd::B => {
                let n = self.vertices.len();
                self.vertices[n - 1].sub(self.vertices[n - 2]).normalized()
            }
        }
    }

    /// Length of the segment adjacent to the tip.
    pub fn tip_segment_length(&self, end: TipEnd) -> f64 {
        match end {
            TipEnd::A => self.vertices[0].distance(self.vertices[1]),
            TipEnd::B => {
                let n = self.vertices.len();
                self.vertices[n - 1].distance(self.vertices[n - 2])
            }
        }
    }

    pub fn tip_active(&self, end: TipEnd) -> bool {
        match end {
            TipEnd::A => self.tip_a_active,
            TipEnd::B => self.tip_b_active,
        }
    }

    pub fn set_tip_active(&mut self, end: TipEnd, active: bool) {
        match end {
            TipEnd::A => self.tip_a_active = active,
            TipEnd::B => self.tip_b_active = active,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Appends a vertex at the tip, moving the tip there.
    pub fn extend_tip(&mut self, end: TipEnd, new_vertex: Point) {
        match end {
            TipEnd::A => self.vertices.insert(0, new_vertex),
            TipEnd::B => self.vertices.push(new_vertex),
        }
    }
}

/// All fractures of a scenario, kept normalized: any vertex of one fracture
/// that lies on a segment of another is an explicit vertex of both.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FractureNetwork {
    pub fractures: Vec<FracturePolyline>,
}

impl FractureNetwork {
    pub fn new(fractures: Vec<FracturePolyline>) -> Self {
        FractureNetwork { fractures }
    }

    pub fn active_tips(&self) -> Vec<TipId> {
        let mut tips = Vec::new();
        for (i, f) in self.fractures.iter().enumerate() {
            for end in TipEnd::BOTH {
                if f.tip_active(end) {
                    tips.push(TipId { fracture: i, end });
                }
            }
        }
        tips
    }

    /// Validates every fracture and the pairwise non-crossing requirement
    /// against the domain polygon.
    pub fn validate(&self, domain: &[Point]) -> Result<()> {
        let eps = 1e-9 * domain_scale(domain);
        for (i, f) in self.fractures.iter().enumerate() {
            f.validate()
                .map_err(|e| Error::Geometry(format!("fracture {i}: {e}")))?;
            for (k, v) in f.vertices.iter().enumerate() {
                let on_boundary = polygon_boundary_distance(domain, *v) <= eps;
                let is_endpoint = k == 0 || k + 1 == f.vertices.len();
                if !polygon_contains(domain, *v) && !on_boundary {
                    return Err(Error::Geometry(format!(
                        "fracture {i} vertex {k} lies outside the domain"
                    )));
                }
                if on_boundary && !is_endpoint {
                    return Err(Error::Geometry(format!(
                        "fracture {i} interior vertex {k} touches the domain boundary"
                    )));
                }
                if on_boundary && is_endpoint && f.tip_active(if k == 0 { TipEnd::A } else { TipEnd::B }) {
                    return Err(Error::Geometry(format!(
                        "fracture {i} tip at vertex {k} terminates on the boundary but is marked active"
                    )));
                }
            }
        }
        // Fractures may share explicit vertices but must not cross.
        for i in 0..self.fractures.len() {
            for j in i + 1..self.fractures.len() {
                self.check_non_crossing(i, j, eps)?;
            }
        }
        Ok(())
    }

    fn check_non_crossing(&self, i: usize, j: usize, eps: f64) -> Result<()> {
        let fi = &self.fractures[i];
        let fj = &self.fractures[j];
        for a in fi.vertices.windows(2) {
            for b in fj.vertices.windows(2) {
                if let Some((t, u, p)) = segment_intersection(a[0], a[1], b[0], b[1], 0.0) {
                    let la = a[0].distance(a[1]);
                    let lb = b[0].distance(b[1]);
                    let at_vertex_a = t * la <= eps || (1.0 - t) * la <= eps;
                    let at_vertex_b = u * lb <= eps || (1.0 - u) * lb <= eps;
                    if !(at_vertex_a && at_vertex_b) {
                        // A T-junction (vertex of one on a segment interior of
                        // the other) is only legal when normalized into an
                        // explicit shared vertex; `normalize` does that, so a
                        // residual hit here is a true crossing.
                        if at_vertex_a || at_vertex_b {
                            return Err(Error::Geometry(format!(
                                "fractures {i} and {j} form an unnormalized junction at ({:.6}, {:.6})",
                                p.x, p.y
                            )));
                        }
                        return Err(Error::Geometry(format!(
                            "fractures {i} and {j} cross at ({:.6}, {:.6})",
                            p.x, p.y
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Inserts explicit vertices where an endpoint of one fracture lies on a
    /// segment of another (T-junctions created by coalescence).
    pub fn normalize(&mut self, scale: f64) {
        let eps = 1e-9 * scale;
        let endpoints: Vec<Point> = self
            .fractures
            .iter()
            .flat_map(|f| [f.vertices[0], *f.vertices.last().unwrap()])
            .collect();
        for f in &mut self.fractures {
            let mut k = 0;
            while k + 1 < f.vertices.len() {
                let (a, b) = (f.vertices[k], f.vertices[k + 1]);
                let seg_len = a.distance(b);
                let mut split_at: Option<Point> = None;
                for p in &endpoints {
                    if p.distance(a) > eps
                        && p.distance(b) > eps
                        && point_segment_distance(*p, a, b) <= eps
                    {
                        split_at = Some(*p);
                        break;
                    }
                }
                if let Some(p) = split_at {
                    let _ = seg_len;
                    f.vertices.insert(k + 1, p);
                }
                k += 1;
            }
        }
    }
}

pub fn domain_scale(domain: &[Point]) -> f64 {
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in domain {
        lo_x = lo_x.min(p.x);
        hi_x = hi_x.max(p.x);
        lo_y = lo_y.min(p.y);
        hi_y = hi_y.max(p.y);
    }
    (hi_x - lo_x).max(hi_y - lo_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn validates_interior_fracture() {
        let net = FractureNetwork::new(vec![FracturePolyline::segment(
            vec![Point::new(0.3, 0.5), Point::new(0.7, 0.5)],
            0.6,
            0.0,
        )]);
        net.validate(&unit_square()).unwrap();
    }

    #[test]
    fn rejects_fracture_outside_domain() {
        let net = FractureNetwork::new(vec![FracturePolyline::segment(
            vec![Point::new(0.3, 0.5), Point::new(1.7, 0.5)],
            0.6,
            0.0,
        )]);
        assert!(net.validate(&unit_square()).is_err());
    }

    #[test]
    fn rejects_crossing_fractures() {
        let net = FractureNetwork::new(vec![
            FracturePolyline::segment(vec![Point::new(0.2, 0.5), Point::new(0.8, 0.5)], 0.6, 0.0),
            FracturePolyline::segment(vec![Point::new(0.5, 0.2), Point::new(0.5, 0.8)], 0.6, 0.0),
        ]);
        assert!(net.validate(&unit_square()).is_err());
    }

    #[test]
    fn normalize_inserts_junction_vertex() {
        let mut net = FractureNetwork::new(vec![
            FracturePolyline::segment(vec![Point::new(0.2, 0.5), Point::new(0.8, 0.5)], 0.6, 0.0),
            FracturePolyline::segment(vec![Point::new(0.5, 0.2), Point::new(0.5, 0.5)], 0.6, 0.0),
        ]);
        net.normalize(1.0);
        assert_eq!(net.fractures[0].vertices.len(), 3);
        assert_eq!(net.fractures[0].vertices[1], Point::new(0.5, 0.5));
        // Normalized junctions pass validation.
        net.validate(&unit_square()).unwrap();
    }

    #[test]
    fn tip_tangent_points_ahead() {
        let f = FracturePolyline::segment(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 0.0, 0.0);
        let tb = f.tip_tangent(TipEnd::B);
        assert!((tb.x - 1.0).abs() < 1e-15 && tb.y.abs() < 1e-15);
        let ta = f.tip_tangent(TipEnd::A);
        assert!((ta.x + 1.0).abs() < 1e-15 && ta.y.abs() < 1e-15);
    }
}
