//! Gauss-point stress evaluation from a displacement solution.

use nalgebra::SVector;

use crate::fem::quadrature::tri_gauss_7;
use crate::fem::solve::DisplacementField;
use crate::fem::Material;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::Result;

/// Stress state at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct GaussStress {
    /// Physical position of the quadrature point.
    pub position: Point,
    pub weight_det_j: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
    /// Out-of-plane stress (plane strain only; zero for plane stress).
    pub szz: f64,
}

pub type ElementStress = [GaussStress; 7];

pub fn stress_at_gauss_points(
    mesh: &Mesh,
    material: &Material,
    u: &DisplacementField,
) -> Result<Vec<ElementStress>> {
    let d = material.d_matrix();
    let mut out = Vec::with_capacity(mesh.elements.len());
    for (e, el) in mesh.elements.iter().enumerate() {
        let geom = mesh.element_geometry(e);
        let mut ue = SVector::<f64, 12>::zeros();
        for (k, &n) in el.iter().enumerate() {
            ue[2 * k] = u.values[n].x;
            ue[2 * k + 1] = u.values[n].y;
        }
        let mut stresses = [GaussStress {
            position: Point::new(0.0, 0.0),
            weight_det_j: 0.0,
            sxx: 0.0,
            syy: 0.0,
            sxy: 0.0,
            szz: 0.0,
        }; 7];
        for (g, q) in tri_gauss_7().iter().enumerate() {
            let (b, det) = geom.b_matrix(q.xi, q.eta)?;
            let eps = b * ue;
            let sig = d * eps;
            stresses[g] = GaussStress {
                position: geom.position(q.xi, q.eta),
                weight_det_j: q.weight * det,
                sxx: sig[0],
                syy: sig[1],
                sxy: sig[2],
                szz: material.sigma_zz(sig[0], sig[1]),
            };
        }
        out.push(stresses);
    }
    Ok(out)
}
