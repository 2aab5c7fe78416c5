//! Mesh refinement and growth-driven remeshing.
//!
//! Both operations go through a deterministic rebuild: the blueprint keeps
//! every free interior point, so regions whose point set is unchanged
//! re-triangulate identically, and the modification stays local in effect.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::fracture::{FractureNetwork, TipId};
use crate::geometry::{point_segment_distance, Point};
use crate::mesh::triangulate::triangulate_blueprint;
use crate::mesh::Mesh;
use crate::Result;

/// Subdivides the marked elements (centroid insertion + rebuild). Marked
/// rosette elements shrink their tip's rosette radius instead.
pub fn refine(mesh: &Mesh, marked: &BTreeSet<usize>) -> Result<Mesh> {
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    if let Some(&bad) = marked.iter().find(|&&e| e >= mesh.elements.len()) {
        return Err(Error::Mesh(format!(
            "marked element {bad} out of range ({} elements)",
            mesh.elements.len()
        )));
    }
    let floor = mesh.blueprint.params.min_size;
    let rosette: BTreeSet<usize> = mesh.quarter_point_elements.iter().copied().collect();

    let mut bp = mesh.blueprint.clone();
    let mut shrink_tips: BTreeSet<TipId> = BTreeSet::new();
    for &e in marked {
        let el = mesh.elements[e];
        if rosette.contains(&e) {
            // Find which tip this fan element belongs to.
            for t in &mesh.tips {
                if el[..3].contains(&t.node) {
                    shrink_tips.insert(t.tip);
                }
            }
            continue;
        }
        let [a, b, c] = [mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]];
        let shortest = a.distance(b).min(b.distance(c)).min(c.distance(a));
        if shortest < 2.0 * floor {
            return Err(Error::BelowMinimumSize { floor });
        }
        let centroid = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        bp.extra_points.push(centroid);
    }
    for tid in shrink_tips {
        let current = mesh
            .tip_info(tid)
            .map(|t| t.radius)
            .unwrap_or(bp.params.rosette_radius_factor * bp.size.h_tip);
        let new_r = 0.5 * current;
        if new_r < 2.0 * floor {
            return Err(Error::BelowMinimumSize { floor });
        }
        bp.rosette_radius.insert(tid, new_r);
    }
    triangulate_blueprint(&bp)
}

/// Rebuilds the mesh after fracture growth: retained interior points within
/// the cavity radius (3 * da) of each new segment are dropped, rosette radii
/// of grown tips reset, and the whole pipeline re-runs on the updated
/// geometry. Returns the mesh unchanged when nothing grew.
pub fn remesh_after_growth(
    mesh: &Mesh,
    fractures: &FractureNetwork,
    grown: &[(TipId, f64)],
) -> Result<Mesh> {
    if grown.is_empty() {
        return Ok(mesh.clone());
    }
    let mut bp = mesh.blueprint.clone();
    bp.fractures = fractures.clone();

    // Cavity clearing around every new segment.
    let mut cavities: Vec<(Point, Point, f64)> = Vec::new();
    for (tid, da) in grown {
        let f = &fractures.fractures[tid.fracture];
        let verts = &f.vertices;
        if verts.len() < 2 {
            continue;
        }
        let (a, b) = match tid.end {
            crate::fracture::TipEnd::A => (verts[0], verts[1]),
            crate::fracture::TipEnd::B => (verts[verts.len() - 1], verts[verts.len() - 2]),
        };
        cavities.push((a, b, 3.0 * da));
        bp.rosette_radius.remove(tid);
    }
    bp.extra_points.retain(|p| {
        !cavities
            .iter()
            .any(|(a, b, r)| point_segment_distance(*p, *a, *b) <= *r)
    });

    triangulate_blueprint(&bp)
}
