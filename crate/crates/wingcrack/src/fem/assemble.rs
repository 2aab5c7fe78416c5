//! Global assembly: element stiffness scatter, consistent traction loads,
//! Dirichlet bookkeeping, and the floating-structure check.

use nalgebra::Matrix3;

use crate::error::Error;
use crate::fem::quadrature::edge_gauss_3;
use crate::fem::solve::SparseSym;
use crate::fem::tri6::element_stiffness;
use crate::fem::Material;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::Result;

/// Where a boundary condition applies: every node of a labeled boundary
/// segment, or the single mesh node closest to a point (to pin rigid modes).
#[derive(Debug, Clone, PartialEq)]
pub enum BcTarget {
    Segment(String),
    NearestNode(Point),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    /// Prescribed displacement, per component (None leaves the component free).
    Displacement { ux: Option<f64>, uy: Option<f64> },
    /// Surface traction vector (only valid on segments).
    Traction { tx: f64, ty: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    pub target: BcTarget,
    pub kind: BcKind,
}

impl BoundaryCondition {
    pub fn displacement(segment: &str, ux: Option<f64>, uy: Option<f64>) -> Self {
        BoundaryCondition {
            target: BcTarget::Segment(segment.to_string()),
            kind: BcKind::Displacement { ux, uy },
        }
    }

    pub fn traction(segment: &str, tx: f64, ty: f64) -> Self {
        BoundaryCondition {
            target: BcTarget::Segment(segment.to_string()),
            kind: BcKind::Traction { tx, ty },
        }
    }

    pub fn pin(at: Point, ux: Option<f64>, uy: Option<f64>) -> Self {
        BoundaryCondition {
            target: BcTarget::NearestNode(at),
            kind: BcKind::Displacement { ux, uy },
        }
    }
}

/// Assembled (pre-contact) system. Fracture faces are independent surfaces:
/// coupling happens only through the contact module.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub ndof: usize,
    pub stiffness: SparseSym,
    pub load: Vec<f64>,
    pub dirichlet: Vec<(usize, f64)>,
    pub residual_tol: f64,
}

pub fn assemble(
    mesh: &Mesh,
    material: &Material,
    bcs: &[BoundaryCondition],
    residual_tol: f64,
) -> Result<LinearSystem> {
    material.validate()?;
    let ndof = 2 * mesh.nodes.len();

    // Element stiffness scatter.
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.elements.len() * 144);
    for (e, el) in mesh.elements.iter().enumerate() {
        let geom = mesh.element_geometry(e);
        let k = element_stiffness(&geom, material).map_err(|err| match err {
            Error::NonPositiveJacobian { det_j, .. } => {
                Error::NonPositiveJacobian { element: e, det_j }
            }
            other => other,
        })?;
        let dofs: Vec<usize> = el.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect();
        for i in 0..12 {
            for j in 0..12 {
                let v = k[(i, j)];
                if v != 0.0 {
                    triplets.push((dofs[i], dofs[j], v));
                }
            }
        }
    }

    // Boundary conditions.
    let mut load = vec![0.0; ndof];
    let mut dirichlet: Vec<(usize, f64)> = Vec::new();
    for bc in bcs {
        match (&bc.target, bc.kind) {
            (BcTarget::Segment(label), kind) => {
                let label_idx = mesh.boundary_label_index(label).ok_or_else(|| {
                    Error::Scenario {
                        path: "boundary_conditions".into(),
                        message: format!("segment label `{label}` does not exist on the mesh"),
                    }
                })?;
                let edges: Vec<_> = mesh
                    .boundary_edges
                    .iter()
                    .filter(|e| e.label == label_idx)
                    .collect();
                if edges.is_empty() {
                    return Err(Error::Scenario {
                        path: "boundary_conditions".into(),
                        message: format!("segment `{label}` has no boundary edges"),
                    });
                }
                match kind {
                    BcKind::Displacement { ux, uy } => {
                        for e in edges {
                            for n in [e.n0, e.n1, e.mid] {
                                if let Some(v) = ux {
                                    dirichlet.push((2 * n, v));
                                }
                                if let Some(v) = uy {
                                    dirichlet.push((2 * n + 1, v));
                                }
                            }
                        }
                    }
                    BcKind::Traction { tx, ty } => {
                        for e in edges {
                            add_edge_traction(mesh, e.n0, e.n1, e.mid, tx, ty, &mut load);
                        }
                    }
                }
            }
            (BcTarget::NearestNode(p), BcKind::Displacement { ux, uy }) => {
                let n = nearest_corner_node(mesh, *p);
                if let Some(v) = ux {
                    dirichlet.push((2 * n, v));
                }
                if let Some(v) = uy {
                    dirichlet.push((2 * n + 1, v));
                }
            }
            (BcTarget::NearestNode(_), BcKind::Traction { .. }) => {
                return Err(Error::Scenario {
                    path: "boundary_conditions".into(),
                    message: "traction conditions require a segment target".into(),
                });
            }
        }
    }
    dirichlet.sort_by(|a, b| a.0.cmp(&b.0));
    dirichlet.dedup_by_key(|e| e.0);

    check_rigid_modes(mesh, &dirichlet)?;

    let stiffness = SparseSym::from_triplets(ndof, &mut triplets);
    Ok(LinearSystem {
        ndof,
        stiffness,
        load,
        dirichlet,
        residual_tol,
    })
}

fn nearest_corner_node(mesh: &Mesh, p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, q) in mesh.nodes.iter().enumerate() {
        if matches!(mesh.node_class[i], crate::mesh::NodeClass::Midside { .. }) {
            continue;
        }
        let d = q.distance(p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Consistent nodal loads for a constant traction on a quadratic edge
/// (3-point Gauss; exact 1/6, 4/6, 1/6 split for straight edges).
fn add_edge_traction(
    mesh: &Mesh,
    n0: usize,
    n1: usize,
    mid: usize,
    tx: f64,
    ty: f64,
    load: &mut [f64],
) {
    let p0 = mesh.nodes[n0];
    let p1 = mesh.nodes[n1];
    let pm = mesh.nodes[mid];
    for (s, w) in edge_gauss_3() {
        // Quadratic 1D shape functions on [-1, 1] for (n0, n1, mid).
        let sh = [0.5 * s * (s - 1.0), 0.5 * s * (s + 1.0), 1.0 - s * s];
        // Tangent of the edge map.
        let dsh = [s - 0.5, s + 0.5, -2.0 * s];
        let tx_v = dsh[0] * p0.x + dsh[1] * p1.x + dsh[2] * pm.x;
        let ty_v = dsh[0] * p0.y + dsh[1] * p1.y + dsh[2] * pm.y;
        let jac = tx_v.hypot(ty_v);
        for (k, &n) in [n0, n1, mid].iter().enumerate() {
            load[2 * n] += w * sh[k] * tx * jac;
            load[2 * n + 1] += w * sh[k] * ty * jac;
        }
    }
}

/// Verifies that the Dirichlet set eliminates all rigid-body modes; reports
/// the dimension of the remaining null space otherwise.
fn check_rigid_modes(mesh: &Mesh, dirichlet: &[(usize, f64)]) -> Result<()> {
    // Rigid modes evaluated at constrained dofs: translation x, translation
    // y, rotation (-y, x). The span of these rows has rank 3 exactly when
    // all rigid motions are constrained.
    let mut gram = Matrix3::<f64>::zeros();
    let mut scale: f64 = 1.0;
    for &(dof, _) in dirichlet {
        let node = dof / 2;
        let p = mesh.nodes[node];
        let row = if dof % 2 == 0 {
            [1.0, 0.0, -p.y]
        } else {
            [0.0, 1.0, p.x]
        };
        for i in 0..3 {
            for j in 0..3 {
                gram[(i, j)] += row[i] * row[j];
            }
        }
        scale = scale.max(p.x.abs()).max(p.y.abs());
    }
    let eig = gram.symmetric_eigenvalues();
    let tol = 1e-12 * (1.0 + scale * scale) * (1.0 + dirichlet.len() as f64);
    let rank = eig.iter().filter(|&&l| l > tol).count();
    if rank < 3 {
        return Err(Error::InsufficientConstraints { dim: 3 - rank });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traction_split_is_one_six_four_six() {
        // Straight edge of length 2 along x with unit ty.
        let mesh = crate::mesh::triangulate(
            &[
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            &["b".into(), "r".into(), "t".into(), "l".into()],
            &crate::fracture::FractureNetwork::default(),
            crate::mesh::SizeField {
                h_tip: 2.0,
                h_max: 2.0,
                grading: 0.0,
            },
            crate::mesh::MeshParams::default(),
        )
        .unwrap();
        let mut load = vec![0.0; 2 * mesh.nodes.len()];
        let e = mesh.boundary_edges[0];
        add_edge_traction(&mesh, e.n0, e.n1, e.mid, 0.0, 1.0, &mut load);
        let len = mesh.nodes[e.n0].distance(mesh.nodes[e.n1]);
        let f0 = load[2 * e.n0 + 1];
        let fm = load[2 * e.mid + 1];
        let f1 = load[2 * e.n1 + 1];
        assert!((f0 - len / 6.0).abs() < 1e-12);
        assert!((f1 - len / 6.0).abs() < 1e-12);
        assert!((fm - 4.0 * len / 6.0).abs() < 1e-12);
        assert!((f0 + f1 + fm - len).abs() < 1e-12);
    }
}
