//! Laplacian smoothing of free interior nodes.
//!
//! Only `NodeClass::Interior` corner nodes move; boundary, fracture-face,
//! tip, ring and quarter-point nodes stay fixed. A move is rejected when it
//! would lower the smallest corner angle of the incident elements, which also
//! rules out non-positive Jacobians. Midside nodes are re-derived from the
//! corner positions afterwards (quarter points excepted).

use std::collections::BTreeSet;

use crate::geometry::Point;
use crate::mesh::{triangle_min_angle_deg, Mesh, NodeClass};

/// Returns a smoothed copy of the mesh.
pub fn laplacian_smooth(mesh: &Mesh, n_iterations: usize) -> Mesh {
    let mut m = mesh.clone();
    smooth_in_place(&mut m, n_iterations);
    m.blueprint.extra_points = m
        .nodes
        .iter()
        .zip(&m.node_class)
        .filter(|(_, c)| matches!(c, NodeClass::Interior))
        .map(|(p, _)| *p)
        .collect();
    m
}

pub(crate) fn smooth_in_place(mesh: &mut Mesh, n_iterations: usize) {
    let n = mesh.nodes.len();
    let movable: Vec<bool> = mesh
        .node_class
        .iter()
        .map(|c| matches!(c, NodeClass::Interior))
        .collect();

    // Corner adjacency and incident elements.
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, el) in mesh.elements.iter().enumerate() {
        for (a, b) in [(el[0], el[1]), (el[1], el[2]), (el[2], el[0])] {
            neighbors[a].insert(b);
            neighbors[b].insert(a);
        }
        for &c in &el[..3] {
            incident[c].push(e);
        }
    }

    for _ in 0..n_iterations {
        for v in 0..n {
            if !movable[v] || neighbors[v].is_empty() {
                continue;
            }
            let mut centroid = Point::new(0.0, 0.0);
            for &w in &neighbors[v] {
                centroid = centroid.add(mesh.nodes[w]);
            }
            centroid = centroid.scale(1.0 / neighbors[v].len() as f64);

            let before = local_min_angle(mesh, &incident[v]);
            let old = mesh.nodes[v];
            mesh.nodes[v] = centroid;
            let after = local_min_angle(mesh, &incident[v]);
            if after < before - 1e-12 {
                mesh.nodes[v] = old; // rejected: would degrade local quality
            }
        }
    }

    // Re-derive midside nodes from corners; quarter points keep their
    // position (their corner nodes are pinned anyway).
    for (i, class) in mesh.node_class.iter().enumerate() {
        if let NodeClass::Midside { a, b, quarter } = class {
            if !quarter {
                mesh.nodes[i] = mesh.nodes[*a].midpoint(mesh.nodes[*b]);
            }
        }
    }
}

fn local_min_angle(mesh: &Mesh, elements: &[usize]) -> f64 {
    let mut min = f64::INFINITY;
    for &e in elements {
        let el = mesh.elements[e];
        let ang = triangle_min_angle_deg(mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]);
        // A flipped (clockwise) element counts as unacceptable.
        let o = crate::geometry::orient(mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]]);
        let ang = if o <= 0.0 { -1.0 } else { ang };
        min = min.min(ang);
    }
    min
}
