//! Conversion of the refined linear triangulation into the final quadratic
//! mesh: fracture-face node duplication (wedge splitting), quadratic
//! promotion, quarter-point rosettes, and Laplacian smoothing.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Error;
use crate::fracture::TipEnd;
use crate::geometry::{orient, Point};
use crate::mesh::triangulate::{CdtOutput, LinFracEdge};
use crate::mesh::{
    BoundaryEdge, FacePairEdge, Mesh, MeshBlueprint, MeshTip, NodeClass, PairedNode,
};
use crate::Result;

pub(crate) fn finish_mesh(bp: &MeshBlueprint, out: CdtOutput) -> Result<Mesh> {
    let CdtOutput {
        mut points,
        flags,
        mut triangles,
        boundary_edges,
        fracture_edges,
        tips,
        quality_exempt,
        rosette_radius,
    } = out;

    // --- wedge duplication -------------------------------------------------
    // orig[n] = structural node this node is a copy of.
    let mut orig: Vec<usize> = (0..points.len()).collect();
    let mut copy_count: BTreeMap<usize, usize> = BTreeMap::new();

    // Wall edges (fracture edges) adjacent to each node, given by the
    // original id of the opposite endpoint.
    let mut wall_neighbors: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for fe in &fracture_edges {
        wall_neighbors.entry(fe.a).or_default().insert(fe.b);
        wall_neighbors.entry(fe.b).or_default().insert(fe.a);
    }

    let mut node_tris: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (t, tri) in triangles.iter().enumerate() {
        for &n in tri {
            node_tris[n].push(t);
        }
    }

    let fracture_nodes: Vec<usize> = flags
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.fractures.is_empty())
        .map(|(i, _)| i)
        .collect();

    for &v in &fracture_nodes {
        let walls = match wall_neighbors.get(&v) {
            Some(w) if w.len() >= 2 => w.clone(),
            _ => continue, // crack tip: faces merge, single node
        };
        let incident: Vec<usize> = node_tris[v].clone();
        if incident.is_empty() {
            continue;
        }
        // Union-find over incident triangles; triangles sharing a non-wall
        // edge at v belong to the same material wedge.
        let mut parent: Vec<usize> = (0..incident.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        // Map actual opposite-node id -> triangles sharing edge (v, w).
        let mut edge_tris: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &t) in incident.iter().enumerate() {
            for &w in &triangles[t] {
                if w != v {
                    edge_tris.entry(w).or_default().push(k);
                }
            }
        }
        for (w, ts) in &edge_tris {
            if ts.len() != 2 {
                continue;
            }
            if walls.contains(&orig[*w]) {
                continue; // cut along the fracture
            }
            let (a, b) = (find(&mut parent, ts[0]), find(&mut parent, ts[1]));
            if a != b {
                parent[a] = b;
            }
        }
        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..incident.len() {
            let r = find(&mut parent, k);
            components.entry(r).or_default().push(k);
        }
        let mut comps: Vec<Vec<usize>> = components.into_values().collect();
        comps.sort_by_key(|c| c.iter().map(|&k| incident[k]).min());
        copy_count.insert(v, comps.len());
        for comp in comps.iter().skip(1) {
            let new_id = points.len();
            points.push(points[v]);
            orig.push(v);
            for &k in comp {
                let t = incident[k];
                for slot in triangles[t].iter_mut() {
                    if *slot == v {
                        *slot = new_id;
                    }
                }
            }
        }
    }

    // --- edge recovery on the duplicated mesh -------------------------------
    // Adjacency of corner edges (actual ids).
    let mut edge_adj: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            edge_adj.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    // Group actual edges by original endpoint pair.
    let mut by_orig: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for &(a, b) in edge_adj.keys() {
        let (oa, ob) = (orig[a].min(orig[b]), orig[a].max(orig[b]));
        by_orig.entry((oa, ob)).or_default().push((a, b));
    }

    let mut final_boundary: Vec<(usize, usize, usize)> = Vec::new();
    for (a0, b0, label) in &boundary_edges {
        let key = (*a0.min(b0), *a0.max(b0));
        let actual = by_orig.get(&key).ok_or_else(|| {
            Error::Mesh(format!("boundary edge ({a0}, {b0}) lost during duplication"))
        })?;
        if actual.len() != 1 {
            return Err(Error::Mesh(format!(
                "boundary edge ({a0}, {b0}) maps to {} edges",
                actual.len()
            )));
        }
        final_boundary.push((actual[0].0, actual[0].1, *label));
    }

    struct RawPair {
        fracture: usize,
        arc_lo: f64,
        arc_hi: f64,
        plus: (usize, usize),  // corner ids ordered along the polyline
        minus: (usize, usize),
    }
    let mut raw_pairs: Vec<RawPair> = Vec::new();
    for fe in &fracture_edges {
        let LinFracEdge {
            a,
            b,
            fracture,
            arc_a,
            arc_b,
        } = *fe;
        let key = (a.min(b), a.max(b));
        let actual = by_orig
            .get(&key)
            .ok_or_else(|| Error::Mesh(format!("fracture edge ({a}, {b}) lost during duplication")))?;
        if actual.len() != 2 {
            return Err(Error::Mesh(format!(
                "fracture edge ({a}, {b}) maps to {} edges (expected 2 faces)",
                actual.len()
            )));
        }
        // Orient along increasing arc.
        let (lo_orig, arc_lo, arc_hi) = if arc_a <= arc_b {
            (a, arc_a, arc_b)
        } else {
            (b, arc_b, arc_a)
        };
        let p_lo = points[lo_orig];
        let p_hi = points[if lo_orig == a { b } else { a }];
        let dir = p_hi.sub(p_lo);
        let mut plus: Option<(usize, usize)> = None;
        let mut minus: Option<(usize, usize)> = None;
        for &(x, y) in actual {
            let ts = &edge_adj[&(x.min(y), x.max(y))];
            if ts.len() != 1 {
                return Err(Error::Mesh(format!(
                    "fracture face edge ({x}, {y}) borders {} elements",
                    ts.len()
                )));
            }
            let tri = triangles[ts[0]];
            let centroid = Point::new(
                (points[tri[0]].x + points[tri[1]].x + points[tri[2]].x) / 3.0,
                (points[tri[0]].y + points[tri[1]].y + points[tri[2]].y) / 3.0,
            );
            let side = dir.cross(centroid.sub(p_lo));
            // Order the actual pair along the polyline.
            let (lo_act, hi_act) = if orig[x] == lo_orig { (x, y) } else { (y, x) };
            if side > 0.0 {
                plus = Some((lo_act, hi_act));
            } else {
                minus = Some((lo_act, hi_act));
            }
        }
        let (plus, minus) = match (plus, minus) {
            (Some(p), Some(m)) => (p, m),
            _ => {
                return Err(Error::Mesh(
                    "fracture edge faces on the same geometric side".into(),
                ))
            }
        };
        raw_pairs.push(RawPair {
            fracture,
            arc_lo,
            arc_hi,
            plus,
            minus,
        });
    }

    // --- quadratic promotion -------------------------------------------------
    let n_corners = points.len();
    let mut midside_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut elements: Vec<[usize; 6]> = Vec::with_capacity(triangles.len());
    let mut node_class: Vec<NodeClass> = vec![NodeClass::Interior; n_corners];
    for tri in &triangles {
        let mut el = [tri[0], tri[1], tri[2], 0, 0, 0];
        for (k, (a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
            .into_iter()
            .enumerate()
        {
            let key = (a.min(b), a.max(b));
            let mid = *midside_of.entry(key).or_insert_with(|| {
                points.push(points[a].midpoint(points[b]));
                points.len() - 1
            });
            el[3 + k] = mid;
        }
        elements.push(el);
    }
    node_class.resize(points.len(), NodeClass::Interior);
    for ((a, b), &mid) in &midside_of {
        node_class[mid] = NodeClass::Midside {
            a: *a,
            b: *b,
            quarter: false,
        };
    }

    // --- corner node classification ------------------------------------------
    let tip_nodes: BTreeMap<usize, (usize, TipEnd)> = tips
        .iter()
        .map(|t| (t.node, (t.tip.fracture, t.tip.end)))
        .collect();
    for n in 0..n_corners {
        let f = &flags[orig[n]];
        node_class[n] = if let Some(&(fracture, end)) = tip_nodes.get(&n) {
            NodeClass::Tip { fracture, end }
        } else if !f.fractures.is_empty() {
            NodeClass::FractureFace {
                fracture: f.fractures[0].0,
            }
        } else if f.is_ring {
            NodeClass::RosetteRing
        } else if f.on_boundary {
            NodeClass::Boundary
        } else {
            NodeClass::Interior
        };
    }

    // --- boundary edges with midside nodes ------------------------------------
    let boundary_final: Vec<BoundaryEdge> = final_boundary
        .iter()
        .map(|&(a, b, label)| BoundaryEdge {
            n0: a,
            n1: b,
            mid: midside_of[&(a.min(b), a.max(b))],
            label,
        })
        .collect();

    // --- face pairs with midside nodes -----------------------------------------
    let mut face_pairs: Vec<FacePairEdge> = raw_pairs
        .iter()
        .map(|rp| {
            let (pl, ph) = rp.plus;
            let (ml, mh) = rp.minus;
            FacePairEdge {
                fracture: rp.fracture,
                plus: [pl, midside_of[&(pl.min(ph), pl.max(ph))], ph],
                minus: [ml, midside_of[&(ml.min(mh), ml.max(mh))], mh],
                arc0: rp.arc_lo,
                arc1: rp.arc_hi,
            }
        })
        .collect();
    face_pairs.sort_by(|a, b| {
        (a.fracture, a.arc0)
            .partial_cmp(&(b.fracture, b.arc0))
            .unwrap()
    });

    // --- paired contact nodes ----------------------------------------------------
    let mut paired_nodes: Vec<PairedNode> = Vec::new();
    {
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        for fp in &face_pairs {
            let entries = [
                (fp.arc0, fp.plus[0], fp.minus[0], false),
                (0.5 * (fp.arc0 + fp.arc1), fp.plus[1], fp.minus[1], true),
                (fp.arc1, fp.plus[2], fp.minus[2], false),
            ];
            for (arc, p, m, is_midside) in entries {
                if p == m {
                    continue; // shared tip node
                }
                // Junction nodes (3+ copies) carry no pair.
                if !is_midside {
                    let oc = copy_count.get(&orig[p]).copied().unwrap_or(1);
                    if oc > 2 {
                        continue;
                    }
                }
                if seen.insert((p.min(m), p.max(m))) {
                    paired_nodes.push(PairedNode {
                        fracture: fp.fracture,
                        arc,
                        plus: p,
                        minus: m,
                        is_midside,
                    });
                }
            }
        }
        paired_nodes.sort_by(|a, b| {
            (a.fracture, a.arc, a.plus)
                .partial_cmp(&(b.fracture, b.arc, b.plus))
                .unwrap()
        });
    }

    // --- rosettes: quarter points and tip bookkeeping ----------------------------
    let mut quarter_point_elements: Vec<usize> = Vec::new();
    let mut mesh_tips: Vec<MeshTip> = Vec::new();
    for t in &tips {
        let tip_node = t.node;
        // Shift the midside of every spoke edge to the quarter position.
        let mut n_spokes = 0usize;
        for ((a, b), &mid) in &midside_of {
            let other = if *a == tip_node {
                Some(*b)
            } else if *b == tip_node {
                Some(*a)
            } else {
                None
            };
            if let Some(o) = other {
                points[mid] = points[tip_node].add(points[o].sub(points[tip_node]).scale(0.25));
                node_class[mid] = NodeClass::Midside {
                    a: *a,
                    b: *b,
                    quarter: true,
                };
                n_spokes += 1;
            }
        }
        if n_spokes < 3 {
            return Err(Error::Mesh(format!(
                "tip {} has a degenerate rosette ({n_spokes} spokes)",
                t.tip
            )));
        }
        for (e, el) in elements.iter().enumerate() {
            if el[..3].contains(&tip_node) {
                quarter_point_elements.push(e);
            }
        }
        // SIF extraction nodes from the tip-face pair edge.
        let fp = face_pairs
            .iter()
            .find(|fp| {
                fp.fracture == t.tip.fracture
                    && (fp.plus[0] == tip_node
                        || fp.plus[2] == tip_node
                        || fp.minus[0] == tip_node
                        || fp.minus[2] == tip_node)
            })
            .ok_or_else(|| Error::Mesh(format!("tip {} has no adjacent face pair", t.tip)))?;
        // Order the triples so index 0 is at the tip.
        let (plus_t, minus_t) = if fp.plus[0] == tip_node {
            (fp.plus, fp.minus)
        } else {
            (
                [fp.plus[2], fp.plus[1], fp.plus[0]],
                [fp.minus[2], fp.minus[1], fp.minus[0]],
            )
        };
        // Map plus/minus (polyline-left/right) onto the +e2 / -e2 sides of
        // the tip frame: at tip B the polyline direction equals the tip
        // tangent, at tip A it is reversed.
        let (upper, lower) = match t.tip.end {
            TipEnd::B => (plus_t, minus_t),
            TipEnd::A => (minus_t, plus_t),
        };
        mesh_tips.push(MeshTip {
            tip: t.tip,
            node: tip_node,
            radius: t.radius,
            tangent: t.tangent,
            upper_quarter: upper[1],
            lower_quarter: lower[1],
            upper_ring: upper[2],
            lower_ring: lower[2],
        });
    }
    quarter_point_elements.sort_unstable();
    quarter_point_elements.dedup();

    // --- quality exemptions through duplication -----------------------------------
    let exempt_orig: BTreeSet<usize> = quality_exempt.into_iter().collect();
    let quality_exempt_nodes: Vec<usize> = (0..n_corners)
        .filter(|&n| exempt_orig.contains(&orig[n]))
        .collect();

    let mut blueprint = bp.clone();
    blueprint.rosette_radius = rosette_radius;

    let mut mesh = Mesh {
        nodes: points,
        node_class,
        elements,
        boundary_labels: blueprint.edge_labels.clone(),
        boundary_edges: boundary_final,
        face_pairs,
        paired_nodes,
        tips: mesh_tips,
        quarter_point_elements,
        quality_exempt_nodes,
        blueprint,
    };

    super::smooth::smooth_in_place(&mut mesh, mesh.blueprint.params.smoothing_iterations);
    mesh.blueprint.extra_points = mesh
        .nodes
        .iter()
        .zip(&mesh.node_class)
        .filter(|(_, c)| matches!(c, NodeClass::Interior))
        .map(|(p, _)| *p)
        .collect();

    mesh.check_invariants()?;
    Ok(mesh)
}

/// Debug helper: orientation of element `e`'s corners in `mesh`.
#[allow(dead_code)]
pub(crate) fn element_orientation(mesh: &Mesh, e: usize) -> f64 {
    let el = mesh.elements[e];
    orient(mesh.nodes[el[0]], mesh.nodes[el[1]], mesh.nodes[el[2]])
}
