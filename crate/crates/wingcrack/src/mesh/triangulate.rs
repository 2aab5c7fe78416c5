//! Constrained Delaunay triangulation of the domain with embedded fracture
//! polylines and rosette templates, plus size- and quality-driven refinement.
//!
//! The crack-tip fans are built as "constrained wheels": ring vertices around
//! each active tip, connected by constraint edges, so the Delaunay core keeps
//! exactly `n_sectors` triangles sharing the tip node. Refinement never
//! touches the inside of a rosette disk.

use std::collections::BTreeMap;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::Error;
use crate::fracture::{FractureNetwork, TipEnd, TipId};
use crate::geometry::{
    orient, point_segment_distance, polygon_boundary_distance, polygon_contains,
    polygon_is_simple, polygon_signed_area, Point,
};
use crate::mesh::{triangle_min_angle_deg, Mesh, MeshBlueprint, MeshParams, SizeField};
use crate::Result;

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SegKind {
    Boundary { label: usize },
    /// Fracture sub-segment with arc positions of both endpoints; `no_split`
    /// marks the crack-face tip element edge whose length fixes the SIF
    /// extraction radius.
    Fracture {
        fracture: usize,
        arc0: f64,
        arc1: f64,
        no_split: bool,
    },
    RosetteRing,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StructuralSegment {
    pub a: Point,
    pub b: Point,
    pub kind: SegKind,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PointFlags {
    pub on_boundary: bool,
    pub is_ring: bool,
    /// Fracture memberships with arc-length position (two entries at
    /// junction vertices).
    pub fractures: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LinFracEdge {
    pub a: usize,
    pub b: usize,
    pub fracture: usize,
    pub arc_a: f64,
    pub arc_b: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TipTemplate {
    pub tip: TipId,
    pub node: usize,
    pub ring0: usize,
    pub radius: f64,
    /// Unit tangent pointing ahead of the tip.
    pub tangent: Point,
}

pub(crate) struct CdtOutput {
    pub points: Vec<Point>,
    pub flags: Vec<PointFlags>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<(usize, usize, usize)>,
    pub fracture_edges: Vec<LinFracEdge>,
    pub tips: Vec<TipTemplate>,
    pub quality_exempt: Vec<usize>,
    pub rosette_radius: BTreeMap<TipId, f64>,
}

/// Builds a conforming quadratic mesh for the given geometry. This is the
/// main mesh construction entry point.
pub fn triangulate(
    domain: &[Point],
    edge_labels: &[String],
    fractures: &FractureNetwork,
    size: SizeField,
    params: MeshParams,
) -> Result<Mesh> {
    let blueprint = MeshBlueprint {
        domain: domain.to_vec(),
        edge_labels: edge_labels.to_vec(),
        fractures: fractures.clone(),
        size,
        params,
        extra_points: Vec::new(),
        rosette_radius: BTreeMap::new(),
    };
    triangulate_blueprint(&blueprint)
}

/// Full pipeline from a blueprint (used by initial builds and all rebuilds).
pub(crate) fn triangulate_blueprint(bp: &MeshBlueprint) -> Result<Mesh> {
    let cdt_out = run_cdt(bp)?;
    super::build::finish_mesh(bp, cdt_out)
}

pub(crate) fn run_cdt(bp: &MeshBlueprint) -> Result<CdtOutput> {
    let mut domain = bp.domain.clone();
    let mut edge_labels = bp.edge_labels.clone();
    validate_domain(&domain, &edge_labels)?;
    if polygon_signed_area(&domain) < 0.0 {
        domain.reverse();
        edge_labels.reverse();
        edge_labels.rotate_left(1);
    }
    bp.size.validate()?;
    bp.fractures.validate(&domain)?;

    let tips = bp.fractures.active_tips();
    let tip_points: Vec<Point> = tips
        .iter()
        .map(|t| bp.fractures.fractures[t.fracture].tip_vertex(t.end))
        .collect();

    let radii = rosette_radii(bp, &domain, &tips)?;

    // --- structural discretization ---------------------------------------
    let mut segments: Vec<StructuralSegment> = Vec::new();
    let mut structural_points: Vec<(Point, PointFlags)> = Vec::new();
    let scale = crate::fracture::domain_scale(&domain);
    let snap = 1e-9 * scale;

    let mut push_point = |pts: &mut Vec<(Point, PointFlags)>, p: Point, f: PointFlags| -> usize {
        for (i, (q, flags)) in pts.iter_mut().enumerate() {
            if q.distance(p) <= snap {
                flags.on_boundary |= f.on_boundary;
                flags.is_ring |= f.is_ring;
                for fr in f.fractures {
                    if !flags.fractures.iter().any(|g| g.0 == fr.0) {
                        flags.fractures.push(fr);
                    }
                }
                return i;
            }
        }
        pts.push((p, f));
        pts.len() - 1
    };

    // Domain boundary, subdivided to the size field.
    let n_dom = domain.len();
    for i in 0..n_dom {
        let a = domain[i];
        let b = domain[(i + 1) % n_dom];
        let label = i;
        let pieces = subdivide(a, b, &bp.size, &tip_points, bp.params.min_size);
        for w in pieces.windows(2) {
            push_point(
                &mut structural_points,
                w[0],
                PointFlags {
                    on_boundary: true,
                    ..Default::default()
                },
            );
            push_point(
                &mut structural_points,
                w[1],
                PointFlags {
                    on_boundary: true,
                    ..Default::default()
                },
            );
            segments.push(StructuralSegment {
                a: w[0],
                b: w[1],
                kind: SegKind::Boundary { label },
            });
        }
    }

    // Fractures: tip segments are split at the rosette radius first; the
    // resulting tip-face edge is never subdivided further.
    let mut tip_templates: Vec<(TipId, Point, Point, f64, Point)> = Vec::new(); // tip, tip pos, ring0 pos, radius, tangent
    for (fi, f) in bp.fractures.fractures.iter().enumerate() {
        let arcs = arc_positions(&f.vertices);
        let total = *arcs.last().unwrap();
        // Forced split arcs at the rosette radius behind each active tip.
        let arc_ring_a = f.tip_a_active.then(|| {
            radii[&TipId {
                fracture: fi,
                end: TipEnd::A,
            }]
        });
        let arc_ring_b = f.tip_b_active.then(|| {
            total
                - radii[&TipId {
                    fracture: fi,
                    end: TipEnd::B,
                }]
        });
        let forced: Vec<f64> = arc_ring_a.iter().chain(arc_ring_b.iter()).copied().collect();
        // Walk the polyline segment by segment, splitting at forced arcs.
        for (si, w) in f.vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (arc_a, arc_b) = (arcs[si], arcs[si + 1]);
            let mut cut_arcs: Vec<f64> = vec![arc_a, arc_b];
            for &fa in &forced {
                if fa > arc_a + snap && fa < arc_b - snap {
                    cut_arcs.push(fa);
                }
            }
            cut_arcs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for c in cut_arcs.windows(2) {
                let (c0, c1) = (c[0], c[1]);
                let p0 = a.lerp(b, (c0 - arc_a) / (arc_b - arc_a));
                let p1 = a.lerp(b, (c1 - arc_a) / (arc_b - arc_a));
                // The sub-segment adjacent to an active tip is the tip face
                // element edge; its length is the SIF extraction radius.
                let tip_face_a =
                    arc_ring_a.is_some_and(|ra| c0 <= snap && (c1 - ra).abs() <= snap);
                let tip_face_b = arc_ring_b
                    .is_some_and(|rb| (c1 - total).abs() <= snap && (c0 - rb).abs() <= snap);
                let no_split = tip_face_a || tip_face_b;
                let pieces = if no_split {
                    vec![p0, p1]
                } else {
                    subdivide(p0, p1, &bp.size, &tip_points, bp.params.min_size)
                };
                let arc_of = |p: Point| c0 + p.distance(p0);
                for piece in pieces.windows(2) {
                    let (q0, q1) = (piece[0], piece[1]);
                    push_point(
                        &mut structural_points,
                        q0,
                        PointFlags {
                            fractures: vec![(fi, arc_of(q0))],
                            ..Default::default()
                        },
                    );
                    push_point(
                        &mut structural_points,
                        q1,
                        PointFlags {
                            fractures: vec![(fi, arc_of(q1))],
                            ..Default::default()
                        },
                    );
                    segments.push(StructuralSegment {
                        a: q0,
                        b: q1,
                        kind: SegKind::Fracture {
                            fracture: fi,
                            arc0: arc_of(q0),
                            arc1: arc_of(q1),
                            no_split,
                        },
                    });
                }
            }
        }
        // Tip templates (ring geometry).
        for end in TipEnd::BOTH {
            if !f.tip_active(end) {
                continue;
            }
            let tid = TipId { fracture: fi, end };
            let r = radii[&tid];
            let tip = f.tip_vertex(end);
            let tangent = f.tip_tangent(end);
            let back = tangent.scale(-1.0);
            let ring0 = tip.add(back.scale(r));
            tip_templates.push((tid, tip, ring0, r, tangent));
        }
    }

    // Rosette rings.
    let n_sec = bp.params.n_sectors.max(4);
    for (tid, tip, ring0, r, _tan) in &tip_templates {
        let base_angle = ring0.sub(*tip).angle();
        let mut ring_pts: Vec<Point> = Vec::with_capacity(n_sec);
        for k in 0..n_sec {
            let p = if k == 0 {
                *ring0
            } else {
                let ang = base_angle + 2.0 * std::f64::consts::PI * (k as f64) / (n_sec as f64);
                tip.add(Point::new(ang.cos(), ang.sin()).scale(*r))
            };
            ring_pts.push(p);
        }
        let _ = tid;
        for k in 0..n_sec {
            let a = ring_pts[k];
            let b = ring_pts[(k + 1) % n_sec];
            push_point(
                &mut structural_points,
                a,
                PointFlags {
                    is_ring: true,
                    ..Default::default()
                },
            );
            push_point(
                &mut structural_points,
                b,
                PointFlags {
                    is_ring: true,
                    ..Default::default()
                },
            );
            segments.push(StructuralSegment {
                a,
                b,
                kind: SegKind::RosetteRing,
            });
        }
    }

    // Quality-exempt vertices: constraint segments meeting at small angles
    // force small triangle angles nearby.
    let exempt_positions = small_angle_vertices(&segments, 2.0 * bp.params.min_angle_deg, snap);

    // --- CDT construction --------------------------------------------------
    let mut cdt: Cdt = Cdt::new();
    let mut handle_of: Vec<spade::handles::FixedVertexHandle> =
        Vec::with_capacity(structural_points.len());
    for (p, _) in &structural_points {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("point insertion failed: {e:?}")))?;
        handle_of.push(h);
    }
    let point_index: BTreeMap<usize, usize> = handle_of
        .iter()
        .enumerate()
        .map(|(i, h)| (h.index(), i))
        .collect();
    if point_index.len() != handle_of.len() {
        return Err(Error::Mesh(
            "structural points collapsed during insertion (degenerate geometry)".into(),
        ));
    }
    for seg in &segments {
        let ia = structural_points
            .iter()
            .position(|(p, _)| p.distance(seg.a) <= snap)
            .expect("segment endpoint registered");
        let ib = structural_points
            .iter()
            .position(|(p, _)| p.distance(seg.b) <= snap)
            .expect("segment endpoint registered");
        let (ha, hb) = (handle_of[ia], handle_of[ib]);
        if ha == hb {
            continue;
        }
        if !cdt.can_add_constraint(ha, hb) {
            return Err(Error::Geometry(format!(
                "constraint segment ({:.4}, {:.4})-({:.4}, {:.4}) intersects another constraint",
                seg.a.x, seg.a.y, seg.b.x, seg.b.y
            )));
        }
        cdt.add_constraint(ha, hb);
    }

    // Retained free interior points from earlier meshes.
    let rosette_disks: Vec<(Point, f64)> = tip_templates
        .iter()
        .map(|(_, tip, _, r, _)| (*tip, *r))
        .collect();
    for p in &bp.extra_points {
        if !polygon_contains(&domain, *p) {
            continue;
        }
        if rosette_disks
            .iter()
            .any(|(c, r)| p.distance(*c) <= 1.2 * r)
        {
            continue;
        }
        let h_local = bp.size.target(*p, &tip_points);
        if segments
            .iter()
            .any(|s| point_segment_distance(*p, s.a, s.b) <= 0.15 * h_local)
        {
            continue;
        }
        cdt.insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("point insertion failed: {e:?}")))?;
    }

    // --- refinement ---------------------------------------------------------
    refine_cdt(
        &mut cdt,
        &domain,
        &segments,
        &bp.size,
        &tip_points,
        &rosette_disks,
        &exempt_positions,
        &bp.params,
    )?;

    // --- extraction ---------------------------------------------------------
    extract(
        &cdt,
        &domain,
        &segments,
        &exempt_positions,
        &tip_templates,
        radii,
        snap,
        bp.params.max_elements,
    )
}

fn validate_domain(domain: &[Point], labels: &[String]) -> Result<()> {
    if domain.len() < 3 {
        return Err(Error::Geometry("domain polygon needs >= 3 vertices".into()));
    }
    if domain.iter().any(|p| !p.is_finite()) {
        return Err(Error::Geometry("domain polygon has non-finite vertex".into()));
    }
    if !polygon_is_simple(domain) {
        return Err(Error::Geometry("domain polygon is not simple".into()));
    }
    if labels.len() != domain.len() {
        return Err(Error::Geometry(format!(
            "domain has {} edges but {} labels",
            domain.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Per-tip rosette radius: the configured fraction of h_tip, capped by local
/// features so the rosette disk stays clear of everything else.
fn rosette_radii(
    bp: &MeshBlueprint,
    domain: &[Point],
    tips: &[TipId],
) -> Result<BTreeMap<TipId, f64>> {
    let mut radii = BTreeMap::new();
    for tid in tips {
        let f = &bp.fractures.fractures[tid.fracture];
        let tip = f.tip_vertex(tid.end);
        let mut r = bp
            .blueprint_radius(*tid)
            .unwrap_or(bp.params.rosette_radius_factor * bp.size.h_tip);
        // Stay inside the tip segment (ring0 must lie on it).
        r = r.min(0.8 * f.tip_segment_length(tid.end));
        // Keep both rosettes of a short fracture apart.
        r = r.min(0.4 * f.total_length());
        // Clear of the domain boundary.
        r = r.min(0.45 * polygon_boundary_distance(domain, tip));
        // Clear of other fractures (and non-adjacent own segments).
        for (fj, g) in bp.fractures.fractures.iter().enumerate() {
            for (sj, w) in g.vertices.windows(2).enumerate() {
                if fj == tid.fracture {
                    let n_seg = f.vertices.len() - 1;
                    let adjacent = match tid.end {
                        TipEnd::A => sj == 0,
                        TipEnd::B => sj == n_seg - 1,
                    };
                    if adjacent {
                        continue;
                    }
                }
                let d = point_segment_distance(tip, w[0], w[1]);
                r = r.min(0.45 * d);
            }
        }
        // Clear of other tips.
        for other in tips {
            if other == tid {
                continue;
            }
            let ot = bp.fractures.fractures[other.fracture].tip_vertex(other.end);
            r = r.min(0.45 * tip.distance(ot));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Mesh(format!(
                "cannot fit a rosette at tip {tid}: no clearance"
            )));
        }
        radii.insert(*tid, r);
    }
    Ok(radii)
}

impl MeshBlueprint {
    fn blueprint_radius(&self, tid: TipId) -> Option<f64> {
        self.rosette_radius.get(&tid).copied()
    }
}

/// Cumulative arc length at each polyline vertex.
pub(crate) fn arc_positions(vertices: &[Point]) -> Vec<f64> {
    let mut arcs = Vec::with_capacity(vertices.len());
    let mut s = 0.0;
    arcs.push(0.0);
    for w in vertices.windows(2) {
        s += w[0].distance(w[1]);
        arcs.push(s);
    }
    arcs
}

/// Splits [a, b] into pieces respecting the local size target, bisecting
/// recursively so graded fields are followed along the segment.
fn subdivide(a: Point, b: Point, size: &SizeField, tips: &[Point], min_size: f64) -> Vec<Point> {
    fn rec(a: Point, b: Point, size: &SizeField, tips: &[Point], min: f64, out: &mut Vec<Point>, depth: u32) {
        let mid = a.midpoint(b);
        let h = size.target(mid, tips).max(min);
        if a.distance(b) > 1.3 * h && depth < 24 {
            rec(a, mid, size, tips, min, out, depth + 1);
            rec(mid, b, size, tips, min, out, depth + 1);
        } else {
            out.push(b);
        }
    }
    let mut out = vec![a];
    rec(a, b, size, tips, min_size, &mut out, 0);
    out
}

/// Vertices where two constraint segments meet at an angle below the given
/// threshold (in degrees): triangle quality requirements are waived there.
fn small_angle_vertices(segments: &[StructuralSegment], threshold_deg: f64, snap: f64) -> Vec<Point> {
    let mut out = Vec::new();
    let thr = threshold_deg.to_radians();
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            let (s, t) = (&segments[i], &segments[j]);
            // Shared endpoint?
            for (p, q) in [(s.a, s.b), (s.b, s.a)] {
                for (u, v) in [(t.a, t.b), (t.b, t.a)] {
                    if p.distance(u) <= snap {
                        let d1 = q.sub(p);
                        let d2 = v.sub(u);
                        let ang = d1
                            .normalized()
                            .dot(d2.normalized())
                            .clamp(-1.0, 1.0)
                            .acos();
                        if ang < thr && !out.iter().any(|o: &Point| o.distance(p) <= snap) {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn refine_cdt(
    cdt: &mut Cdt,
    domain: &[Point],
    segments: &[StructuralSegment],
    size: &SizeField,
    tip_points: &[Point],
    rosette_disks: &[(Point, f64)],
    exempt_positions: &[Point],
    params: &MeshParams,
) -> Result<()> {
    let quality_target = params.min_angle_deg + 1.0;
    let scale = crate::fracture::domain_scale(domain);
    let snap = 1e-9 * scale;

    let in_rosette = |p: Point, factor: f64| {
        rosette_disks
            .iter()
            .any(|(c, r)| p.distance(*c) <= factor * r)
    };
    let is_exempt = |p: Point| exempt_positions.iter().any(|e| e.distance(p) <= snap);

    for _pass in 0..80 {
        if cdt.num_inner_faces() > params.max_elements {
            return Err(Error::TooManyElements {
                max: params.max_elements,
                reached: cdt.num_inner_faces(),
            });
        }
        // Gather candidate insertion points from bad faces.
        let mut candidates: Vec<(usize, Point, f64)> = Vec::new(); // (face idx, circumcenter, local h)
        for face in cdt.inner_faces() {
            let vs = face.vertices();
            let p: Vec<Point> = vs
                .iter()
                .map(|v| {
                    let q = v.position();
                    Point::new(q.x, q.y)
                })
                .collect();
            let centroid = Point::new(
                (p[0].x + p[1].x + p[2].x) / 3.0,
                (p[0].y + p[1].y + p[2].y) / 3.0,
            );
            if !polygon_contains(domain, centroid) {
                continue;
            }
            if in_rosette(centroid, 1.0) {
                continue;
            }
            let h = size.target(centroid, tip_points);
            let longest = p[0]
                .distance(p[1])
                .max(p[1].distance(p[2]))
                .max(p[2].distance(p[0]));
            let min_angle = triangle_min_angle_deg(p[0], p[1], p[2]);
            let size_bad = longest > 1.45 * h && longest > 2.0 * params.min_size;
            let quality_bad = min_angle < quality_target && !p.iter().any(|&q| is_exempt(q));
            if size_bad || quality_bad {
                let cc = circumcenter(p[0], p[1], p[2]);
                candidates.push((face.index(), cc, h));
            }
        }
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by_key(|c| c.0);

        // Snapshot of the constraint edges for encroachment checks; vertex
        // handles stay valid across insertions.
        let mut constraint_snapshot: Vec<ConstraintSnap> = Vec::new();
        for e in cdt.undirected_edges() {
            if !e.is_constraint_edge() {
                continue;
            }
            let [va, vb] = e.vertices();
            let a = Point::new(va.position().x, va.position().y);
            let b = Point::new(vb.position().x, vb.position().y);
            constraint_snapshot.push(ConstraintSnap {
                ha: va.fix(),
                hb: vb.fix(),
                mid: a.midpoint(b),
                radius: 0.5 * a.distance(b),
                protected: matches!(
                    classify_segment(&segments_containing(segments, a, b, snap)),
                    ConstraintClass::Protected
                ),
                split_done: false,
            });
        }

        let mut inserted = 0usize;
        for (_, cc, h) in candidates {
            let p = cc;
            if !p.is_finite() {
                continue;
            }
            // A circumcenter outside the domain or inside a rosette disk is
            // handled through encroachment (or skipped).
            let outside = !polygon_contains(domain, p);
            if in_rosette(p, 1.02) && !outside {
                continue;
            }
            // Encroachment against the snapshot of constraint edges.
            let mut split_idx: Option<usize> = None;
            let mut blocked = false;
            for (i, snap_e) in constraint_snapshot.iter().enumerate() {
                if p.distance(snap_e.mid) < snap_e.radius * 0.999 {
                    if snap_e.protected || 2.0 * snap_e.radius < 2.0 * params.min_size {
                        blocked = true;
                    } else if !snap_e.split_done {
                        split_idx = Some(i);
                    } else {
                        blocked = true; // already split this pass; re-evaluate next pass
                    }
                    break;
                }
            }
            if blocked {
                continue;
            }
            if let Some(i) = split_idx {
                let s = constraint_snapshot[i];
                if split_constraint(cdt, s.ha, s.hb, s.mid)? {
                    inserted += 1;
                }
                constraint_snapshot[i].split_done = true;
                continue;
            }
            if outside {
                continue;
            }
            // Spacing guard against over-insertion from stale candidates.
            if too_close(cdt, p, 0.4 * h) {
                continue;
            }
            cdt.insert(Point2::new(p.x, p.y))
                .map_err(|e| Error::Mesh(format!("refinement insertion failed: {e:?}")))?;
            inserted += 1;
        }
        if inserted == 0 {
            break;
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct ConstraintSnap {
    ha: spade::handles::FixedVertexHandle,
    hb: spade::handles::FixedVertexHandle,
    mid: Point,
    radius: f64,
    protected: bool,
    split_done: bool,
}

enum ConstraintClass {
    /// Ring edges and tip-face edges: never split.
    Protected,
    Splittable,
}

fn segments_containing(
    segments: &[StructuralSegment],
    a: Point,
    b: Point,
    snap: f64,
) -> Vec<SegKind> {
    segments
        .iter()
        .filter(|s| {
            point_segment_distance(a, s.a, s.b) <= snap && point_segment_distance(b, s.a, s.b) <= snap
        })
        .map(|s| s.kind)
        .collect()
}

fn classify_segment(kinds: &[SegKind]) -> ConstraintClass {
    for k in kinds {
        match k {
            SegKind::RosetteRing => return ConstraintClass::Protected,
            SegKind::Fracture { no_split: true, .. } => return ConstraintClass::Protected,
            _ => {}
        }
    }
    ConstraintClass::Splittable
}

/// Splits the constraint edge (ha, hb) at its midpoint, keeping both halves
/// constrained. The constraint is removed before the midpoint insertion so
/// Delaunay legalization can flip the old edge away even when the midpoint
/// lands a few ulps off the segment. Returns false when the edge vanished
/// since the snapshot was taken.
fn split_constraint(
    cdt: &mut Cdt,
    ha: spade::handles::FixedVertexHandle,
    hb: spade::handles::FixedVertexHandle,
    mid: Point,
) -> Result<bool> {
    let mut found = None;
    for e in cdt.undirected_edges() {
        let [u, v] = e.vertices();
        if (u.fix() == ha && v.fix() == hb) || (u.fix() == hb && v.fix() == ha) {
            found = Some(e.fix());
            break;
        }
    }
    let Some(fixed) = found else {
        return Ok(false);
    };
    if !cdt.is_constraint_edge(fixed) {
        return Ok(false);
    }
    cdt.remove_constraint_edge(fixed);
    let hm = cdt
        .insert(Point2::new(mid.x, mid.y))
        .map_err(|e| Error::Mesh(format!("constraint split failed: {e:?}")))?;
    if hm == ha || hm == hb {
        // Degenerate (midpoint collapsed onto an endpoint); restore.
        cdt.add_constraint(ha, hb);
        return Ok(false);
    }
    if !cdt.exists_constraint(ha, hm) {
        cdt.add_constraint(ha, hm);
    }
    if !cdt.exists_constraint(hm, hb) {
        cdt.add_constraint(hm, hb);
    }
    Ok(true)
}

fn too_close(cdt: &Cdt, p: Point, dist: f64) -> bool {
    use spade::PositionInTriangulation::*;
    match cdt.locate(Point2::new(p.x, p.y)) {
        OnVertex(_) => true,
        OnEdge(e) => {
            let e = cdt.directed_edge(e);
            [e.from(), e.to()].iter().any(|v| {
                Point::new(v.position().x, v.position().y).distance(p) < dist
            })
        }
        OnFace(f) => cdt.face(f).vertices().iter().any(|v| {
            Point::new(v.position().x, v.position().y).distance(p) < dist
        }),
        OutsideOfConvexHull(_) | NoTriangulation => false,
    }
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let ux = ((a.x * a.x + a.y * a.y) * (b.y - c.y)
        + (b.x * b.x + b.y * b.y) * (c.y - a.y)
        + (c.x * c.x + c.y * c.y) * (a.y - b.y))
        / d;
    let uy = ((a.x * a.x + a.y * a.y) * (c.x - b.x)
        + (b.x * b.x + b.y * b.y) * (a.x - c.x)
        + (c.x * c.x + c.y * c.y) * (b.x - a.x))
        / d;
    Point::new(ux, uy)
}

#[allow(clippy::too_many_arguments)]
fn extract(
    cdt: &Cdt,
    domain: &[Point],
    segments: &[StructuralSegment],
    exempt_positions: &[Point],
    tip_templates: &[(TipId, Point, Point, f64, Point)],
    rosette_radius: BTreeMap<TipId, f64>,
    snap: f64,
    max_elements: usize,
) -> Result<CdtOutput> {
    // Stable node numbering by spade vertex index.
    let mut node_of_vertex: BTreeMap<usize, usize> = BTreeMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut flags: Vec<PointFlags> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    let mut face_entries: Vec<(usize, [usize; 3], [Point; 3])> = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let pos: Vec<Point> = vs
            .iter()
            .map(|v| Point::new(v.position().x, v.position().y))
            .collect();
        let centroid = Point::new(
            (pos[0].x + pos[1].x + pos[2].x) / 3.0,
            (pos[0].y + pos[1].y + pos[2].y) / 3.0,
        );
        if !polygon_contains(domain, centroid) {
            continue;
        }
        face_entries.push((
            face.index(),
            [vs[0].index(), vs[1].index(), vs[2].index()],
            [pos[0], pos[1], pos[2]],
        ));
    }
    face_entries.sort_by_key(|f| f.0);
    if face_entries.len() > max_elements {
        return Err(Error::TooManyElements {
            max: max_elements,
            reached: face_entries.len(),
        });
    }

    for (_, vidx, pos) in &face_entries {
        let mut tri = [0usize; 3];
        for k in 0..3 {
            let id = *node_of_vertex.entry(vidx[k]).or_insert_with(|| {
                points.push(pos[k]);
                flags.push(PointFlags::default());
                points.len() - 1
            });
            tri[k] = id;
        }
        if orient(points[tri[0]], points[tri[1]], points[tri[2]]) <= 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }

    // Resolve constraint-edge provenance and point flags.
    let mut boundary_edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut fracture_edges: Vec<LinFracEdge> = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [va, vb] = e.vertices();
        let (ia, ib) = (va.index(), vb.index());
        let (Some(&na), Some(&nb)) = (node_of_vertex.get(&ia), node_of_vertex.get(&ib)) else {
            continue;
        };
        let a = points[na];
        let b = points[nb];
        let kinds = segments_with_arcs(segments, a, b, snap);
        if kinds.is_empty() {
            return Err(Error::Mesh(format!(
                "constraint edge ({:.4}, {:.4})-({:.4}, {:.4}) has no structural provenance",
                a.x, a.y, b.x, b.y
            )));
        }
        for k in kinds {
            match k {
                ResolvedSeg::Boundary { label } => boundary_edges.push((na, nb, label)),
                ResolvedSeg::Fracture {
                    fracture,
                    arc_a,
                    arc_b,
                } => {
                    flags[na].add_fracture(fracture, arc_a);
                    flags[nb].add_fracture(fracture, arc_b);
                    fracture_edges.push(LinFracEdge {
                        a: na,
                        b: nb,
                        fracture,
                        arc_a,
                        arc_b,
                    });
                }
                ResolvedSeg::Ring => {
                    flags[na].is_ring = true;
                    flags[nb].is_ring = true;
                }
            }
        }
    }
    for (na, nb, _) in &boundary_edges {
        flags[*na].on_boundary = true;
        flags[*nb].on_boundary = true;
    }

    // Tips.
    let mut tips = Vec::new();
    for (tid, tip_pos, ring0_pos, r, tangent) in tip_templates {
        let node = points
            .iter()
            .position(|p| p.distance(*tip_pos) <= snap)
            .ok_or_else(|| Error::Mesh(format!("tip {tid} vertex missing from mesh")))?;
        let ring0 = points
            .iter()
            .position(|p| p.distance(*ring0_pos) <= snap)
            .ok_or_else(|| Error::Mesh(format!("tip {tid} ring vertex missing from mesh")))?;
        tips.push(TipTemplate {
            tip: *tid,
            node,
            ring0,
            radius: *r,
            tangent: *tangent,
        });
    }

    let quality_exempt: Vec<usize> = exempt_positions
        .iter()
        .filter_map(|e| points.iter().position(|p| p.distance(*e) <= snap))
        .collect();

    Ok(CdtOutput {
        points,
        flags,
        triangles,
        boundary_edges,
        fracture_edges,
        tips,
        quality_exempt,
        rosette_radius,
    })
}

enum ResolvedSeg {
    Boundary { label: usize },
    Fracture { fracture: usize, arc_a: f64, arc_b: f64 },
    Ring,
}

impl PointFlags {
    fn add_fracture(&mut self, fracture: usize, arc: f64) {
        if !self.fractures.iter().any(|f| f.0 == fracture) {
            self.fractures.push((fracture, arc));
        }
    }
}

/// All structural segments containing both endpoints, with arcs interpolated
/// for fracture segments.
fn segments_with_arcs(
    segments: &[StructuralSegment],
    a: Point,
    b: Point,
    snap: f64,
) -> Vec<ResolvedSeg> {
    let mut out = Vec::new();
    for s in segments {
        if point_segment_distance(a, s.a, s.b) > snap || point_segment_distance(b, s.a, s.b) > snap
        {
            continue;
        }
        match s.kind {
            SegKind::Boundary { label } => out.push(ResolvedSeg::Boundary { label }),
            SegKind::Fracture {
                fracture,
                arc0,
                arc1,
                ..
            } => {
                let len = s.a.distance(s.b);
                let ta = a.distance(s.a) / len;
                let tb = b.distance(s.a) / len;
                out.push(ResolvedSeg::Fracture {
                    fracture,
                    arc_a: arc0 + ta * (arc1 - arc0),
                    arc_b: arc0 + tb * (arc1 - arc0),
                });
            }
            SegKind::RosetteRing => out.push(ResolvedSeg::Ring),
        }
    }
    out
}
