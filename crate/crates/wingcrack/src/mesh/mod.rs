//! Unstructured 6-node triangle meshes conforming to the domain boundary and
//! all fracture polylines.
//!
//! The mesh duplicates fracture-face nodes (one node per face, merging at
//! tips), carries a quarter-point rosette around every active tip, and keeps
//! enough blueprint information to rebuild itself after refinement or crack
//! growth. Geometry (the fracture network) stays authoritative; meshes are
//! derived values.

mod build;
mod refine;
mod smooth;
mod triangulate;

pub use refine::{refine, remesh_after_growth};
pub use smooth::laplacian_smooth;
pub use triangulate::triangulate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fracture::{FractureNetwork, TipEnd, TipId};
use crate::geometry::{orient, Point};
use crate::Result;

/// Target element-size field: `h(p) = min(h_tip + grading * r, h_max)` with
/// `r` the distance from `p` to the nearest active tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeField {
    pub h_tip: f64,
    pub h_max: f64,
    pub grading: f64,
}

impl SizeField {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_tip > 0.0 && self.h_tip <= self.h_max) {
            return Err(Error::Parse(format!(
                "size field requires 0 < h_tip <= h_max, got h_tip={}, h_max={}",
                self.h_tip, self.h_max
            )));
        }
        if !(self.grading >= 0.0) {
            return Err(Error::Parse(format!(
                "size field grading must be >= 0, got {}",
                self.grading
            )));
        }
        Ok(())
    }

    pub fn target(&self, p: Point, tips: &[Point]) -> f64 {
        let mut r = f64::INFINITY;
        for t in tips {
            r = r.min(p.distance(*t));
        }
        if r.is_finite() {
            (self.h_tip + self.grading * r).min(self.h_max)
        } else {
            self.h_max
        }
    }

    pub fn scaled(&self, factor: f64) -> SizeField {
        SizeField {
            h_tip: self.h_tip * factor,
            h_max: self.h_max * factor,
            grading: self.grading,
        }
    }
}

/// Meshing controls. The rosette sector count, radius factor and smoothing
/// iteration count are engineering defaults, exposed in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub n_sectors: usize,
    /// Rosette radius as a fraction of `h_tip` (before local-feature capping).
    pub rosette_radius_factor: f64,
    pub smoothing_iterations: usize,
    pub min_angle_deg: f64,
    pub max_elements: usize,
    /// Refinement floor: no edge is split below this length.
    pub min_size: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            n_sectors: 8,
            rosette_radius_factor: 0.5,
            smoothing_iterations: 3,
            min_angle_deg: 20.0,
            max_elements: 200_000,
            min_size: 1e-4,
        }
    }
}

/// Per-node classification, driving smoothing and export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeClass {
    /// Free interior corner node (movable by smoothing).
    Interior,
    /// Domain-boundary corner node.
    Boundary,
    /// Duplicated fracture-face corner node.
    FractureFace { fracture: usize },
    /// Crack-tip corner node (single; faces merge here).
    Tip { fracture: usize, end: TipEnd },
    /// Rosette ring corner node (pinned to keep the fan regular).
    RosetteRing,
    /// Midside node of corners (a, b); re-derived from corners after
    /// smoothing unless it is a quarter-point node.
    Midside { a: usize, b: usize, quarter: bool },
}

/// Quadratic boundary edge with its label (for boundary conditions).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub n0: usize,
    pub n1: usize,
    pub mid: usize,
    pub label: usize,
}

/// Matched pair of fracture-face edges: `plus` lies on the left of the
/// polyline direction. Node triples run along the polyline: [corner at
/// `arc0`, midside, corner at `arc1`].
#[derive(Debug, Clone, Copy)]
pub struct FacePairEdge {
    pub fracture: usize,
    pub plus: [usize; 3],
    pub minus: [usize; 3],
    pub arc0: f64,
    pub arc1: f64,
}

/// A duplicated fracture node: plus/minus copies at the same reference
/// position, candidate for a contact pair.
#[derive(Debug, Clone, Copy)]
pub struct PairedNode {
    pub fracture: usize,
    /// Arc-length position along the fracture polyline.
    pub arc: f64,
    pub plus: usize,
    pub minus: usize,
    /// True for midside nodes (affects traction weights).
    pub is_midside: bool,
}

/// Tip bookkeeping: rosette geometry plus the face nodes used by the
/// displacement-correlation SIF extraction.
#[derive(Debug, Clone, Copy)]
pub struct MeshTip {
    pub tip: TipId,
    pub node: usize,
    /// Rosette radius, equal to the crack-face tip element length L.
    pub radius: f64,
    /// Unit tangent pointing ahead of the tip (into intact material).
    pub tangent: Point,
    /// Face nodes at L/4 and L behind the tip, on the +e2 side (e2 =
    /// tangent rotated +90 degrees) and the -e2 side.
    pub upper_quarter: usize,
    pub lower_quarter: usize,
    pub upper_ring: usize,
    pub lower_ring: usize,
}

/// Everything needed to rebuild the mesh from scratch (refinement, growth).
#[derive(Debug, Clone)]
pub struct MeshBlueprint {
    pub domain: Vec<Point>,
    pub edge_labels: Vec<String>,
    pub fractures: FractureNetwork,
    pub size: SizeField,
    pub params: MeshParams,
    /// Free interior points retained across rebuilds (smoothed positions).
    pub extra_points: Vec<Point>,
    /// Per-tip rosette radius overrides (shrunk by refinement).
    pub rosette_radius: BTreeMap<TipId, f64>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub node_class: Vec<NodeClass>,
    /// 6-node triangles: corners 0-2 counterclockwise, then midsides
    /// (0-1), (1-2), (2-0).
    pub elements: Vec<[usize; 6]>,
    pub boundary_labels: Vec<String>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub face_pairs: Vec<FacePairEdge>,
    pub paired_nodes: Vec<PairedNode>,
    pub tips: Vec<MeshTip>,
    pub quarter_point_elements: Vec<usize>,
    /// Corner nodes exempt from the minimum-angle requirement because the
    /// input geometry forces a small angle there (e.g. fracture junctions).
    pub quality_exempt_nodes: Vec<usize>,
    pub blueprint: MeshBlueprint,
}

/// Per-element quality entry.
#[derive(Debug, Clone, Copy)]
pub struct QualityEntry {
    pub element: usize,
    pub min_angle_deg: f64,
    pub min_jacobian: f64,
    pub in_rosette: bool,
}

impl Mesh {
    pub fn corner_count_of(&self, e: usize) -> [usize; 3] {
        let el = self.elements[e];
        [el[0], el[1], el[2]]
    }

    pub fn tip_info(&self, tip: TipId) -> Option<&MeshTip> {
        self.tips.iter().find(|t| t.tip == tip)
    }

    /// Smallest corner angle of element `e`, in degrees.
    pub fn element_min_angle_deg(&self, e: usize) -> f64 {
        let [a, b, c] = self.corner_count_of(e);
        triangle_min_angle_deg(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    /// Per-element minimum angle and Jacobian report, sorted ascending by
    /// min angle.
    pub fn quality_report(&self) -> Vec<QualityEntry> {
        let rosette: std::collections::BTreeSet<usize> =
            self.quarter_point_elements.iter().copied().collect();
        let mut entries: Vec<QualityEntry> = (0..self.elements.len())
            .map(|e| {
                let min_jacobian = self.element_min_jacobian(e);
                QualityEntry {
                    element: e,
                    min_angle_deg: self.element_min_angle_deg(e),
                    min_jacobian,
                    in_rosette: rosette.contains(&e),
                }
            })
            .collect();
        entries.sort_by(|a, b| {
            a.min_angle_deg
                .partial_cmp(&b.min_angle_deg)
                .unwrap()
                .then(a.element.cmp(&b.element))
        });
        entries
    }

    /// Minimum Jacobian determinant over the 7 quadrature points.
    pub fn element_min_jacobian(&self, e: usize) -> f64 {
        let geom = self.element_geometry(e);
        crate::fem::tri_gauss_7()
            .iter()
            .map(|g| {
                let j = geom.jacobian(g.xi, g.eta);
                j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)]
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn element_geometry(&self, e: usize) -> crate::fem::Tri6Geom {
        let el = self.elements[e];
        crate::fem::Tri6Geom::new([
            self.nodes[el[0]],
            self.nodes[el[1]],
            self.nodes[el[2]],
            self.nodes[el[3]],
            self.nodes[el[4]],
            self.nodes[el[5]],
        ])
    }

    pub fn boundary_label_index(&self, label: &str) -> Option<usize> {
        self.boundary_labels.iter().position(|l| l == label)
    }

    /// Full structural validation; used heavily by tests and after every
    /// rebuild in debug builds.
    pub fn check_invariants(&self) -> Result<()> {
        let n_nodes = self.nodes.len();
        for (i, p) in self.nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Mesh(format!("node {i} has non-finite coordinates")));
            }
        }
        if self.node_class.len() != n_nodes {
            return Err(Error::Mesh("node_class length mismatch".into()));
        }

        // Orientation, Jacobians, midside placement.
        for (e, el) in self.elements.iter().enumerate() {
            if el.iter().any(|&n| n >= n_nodes) {
                return Err(Error::Mesh(format!("element {e} references missing node")));
            }
            let area2 = orient(self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]);
            if area2 <= 0.0 {
                return Err(Error::Mesh(format!(
                    "element {e} corners are not counterclockwise (2A = {area2:.3e})"
                )));
            }
            let min_j = self.element_min_jacobian(e);
            if min_j <= 0.0 {
                return Err(Error::NonPositiveJacobian {
                    element: e,
                    det_j: min_j,
                });
            }
            for (k, &(a, b)) in [(el[0], el[1]), (el[1], el[2]), (el[2], el[0])]
                .iter()
                .enumerate()
            {
                let mid = el[3 + k];
                match self.node_class[mid] {
                    NodeClass::Midside { quarter, .. } => {
                        let pa = self.nodes[a];
                        let pb = self.nodes[b];
                        let pm = self.nodes[mid];
                        if quarter {
                            // One endpoint is the tip; check |m - tip| / |other - tip| = 1/4.
                            let tip_first = matches!(self.node_class[a], NodeClass::Tip { .. });
                            let (tip, far) = if tip_first { (pa, pb) } else { (pb, pa) };
                            let ratio = pm.distance(tip) / far.distance(tip);
                            if (ratio - 0.25).abs() > 1e-12 {
                                return Err(Error::Mesh(format!(
                                    "quarter-point midside {mid} at ratio {ratio} (element {e})"
                                )));
                            }
                        } else {
                            let d = pm.distance(pa.midpoint(pb));
                            let scale = pa.distance(pb);
                            if d > 1e-9 * scale {
                                return Err(Error::Mesh(format!(
                                    "midside {mid} off edge midpoint by {d:.3e} (element {e})"
                                )));
                            }
                        }
                    }
                    _ => {
                        return Err(Error::Mesh(format!(
                            "element {e} midside slot holds non-midside node {mid}"
                        )))
                    }
                }
            }
        }

        // Edge conformity: interior corner edges shared by exactly 2 elements;
        // boundary and fracture-face edges by exactly 1.
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for el in &self.elements {
            for (a, b) in [(el[0], el[1]), (el[1], el[2]), (el[2], el[0])] {
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut single_edges: std::collections::BTreeSet<(usize, usize)> = edge_count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&k, _)| k)
            .collect();
        for (&(a, b), &c) in &edge_count {
            if c > 2 {
                return Err(Error::Mesh(format!(
                    "edge ({a}, {b}) shared by {c} elements"
                )));
            }
        }
        for be in &self.boundary_edges {
            let key = (be.n0.min(be.n1), be.n0.max(be.n1));
            if !single_edges.remove(&key) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({}, {}) is not a single-element edge",
                    be.n0, be.n1
                )));
            }
        }
        for fp in &self.face_pairs {
            for tri in [fp.plus, fp.minus] {
                let key = (tri[0].min(tri[2]), tri[0].max(tri[2]));
                if !single_edges.remove(&key) {
                    return Err(Error::Mesh(format!(
                        "fracture-face edge ({}, {}) is not a single-element edge",
                        tri[0], tri[2]
                    )));
                }
            }
        }
        if let Some(&(a, b)) = single_edges.iter().next() {
            return Err(Error::Mesh(format!(
                "edge ({a}, {b}) lies on one element only but is neither boundary nor fracture face"
            )));
        }

        // Face pairs: coincident reference coordinates, matched arc intervals.
        for fp in &self.face_pairs {
            for k in 0..3 {
                let d = self.nodes[fp.plus[k]].distance(self.nodes[fp.minus[k]]);
                if d != 0.0 {
                    return Err(Error::Mesh(format!(
                        "face pair nodes {} and {} separated by {d:.3e} in reference configuration",
                        fp.plus[k], fp.minus[k]
                    )));
                }
            }
            if !(fp.arc1 > fp.arc0) {
                return Err(Error::Mesh("face pair with non-increasing arcs".into()));
            }
        }

        // Paired nodes coincide and are distinct copies.
        for pn in &self.paired_nodes {
            if pn.plus == pn.minus {
                return Err(Error::Mesh(format!(
                    "paired node {} duplicated onto itself",
                    pn.plus
                )));
            }
            if self.nodes[pn.plus].distance(self.nodes[pn.minus]) != 0.0 {
                return Err(Error::Mesh(format!(
                    "paired nodes {} / {} not coincident",
                    pn.plus, pn.minus
                )));
            }
        }

        // Tips: single node, spokes carry quarter-point midsides.
        for t in &self.tips {
            match self.node_class[t.node] {
                NodeClass::Tip { .. } => {}
                _ => return Err(Error::Mesh(format!("tip node {} misclassified", t.node))),
            }
            if !(t.radius > 0.0) {
                return Err(Error::Mesh("tip with non-positive rosette radius".into()));
            }
        }

        // Quality outside rosettes and away from exempt feature vertices.
        let rosette: std::collections::BTreeSet<usize> =
            self.quarter_point_elements.iter().copied().collect();
        let exempt: std::collections::BTreeSet<usize> =
            self.quality_exempt_nodes.iter().copied().collect();
        for e in 0..self.elements.len() {
            if rosette.contains(&e) {
                continue;
            }
            let [a, b, c] = self.corner_count_of(e);
            if exempt.contains(&a) || exempt.contains(&b) || exempt.contains(&c) {
                continue;
            }
            let ang = self.element_min_angle_deg(e);
            if ang < self.blueprint.params.min_angle_deg - 1e-9 {
                return Err(Error::Mesh(format!(
                    "element {e} min angle {ang:.2} below {}",
                    self.blueprint.params.min_angle_deg
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn triangle_min_angle_deg(a: Point, b: Point, c: Point) -> f64 {
    let la = b.distance(c);
    let lb = c.distance(a);
    let lc = a.distance(b);
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cosv = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        cosv.acos()
    };
    let a1 = angle(la, lb, lc);
    let a2 = angle(lb, lc, la);
    let a3 = angle(lc, la, lb);
    a1.min(a2).min(a3).to_degrees()
}
