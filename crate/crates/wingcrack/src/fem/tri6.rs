//! 6-node quadratic triangle: shape functions, strain-displacement matrix and
//! element stiffness.
//!
//! Node order: corners 0, 1, 2 (counterclockwise), then midside nodes
//! 3 = mid(0,1), 4 = mid(1,2), 5 = mid(2,0). The same isoparametric machinery
//! covers regular elements and quarter-point tip elements, whose midside
//! nodes sit at the quarter position.

use nalgebra::{Matrix2, SMatrix};

use crate::error::Error;
use crate::fem::material::Material;
use crate::fem::quadrature::tri_gauss_7;
use crate::geometry::Point;
use crate::Result;

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type BMat = SMatrix<f64, 3, 12>;

/// Element geometry: the six node positions.
#[derive(Debug, Clone, Copy)]
pub struct Tri6Geom {
    pub nodes: [Point; 6],
}

impl Tri6Geom {
    pub fn new(nodes: [Point; 6]) -> Self {
        Tri6Geom { nodes }
    }

    /// Straight-sided element from corners, midside nodes at edge midpoints.
    pub fn from_corners(c0: Point, c1: Point, c2: Point) -> Self {
        Tri6Geom {
            nodes: [
                c0,
                c1,
                c2,
                c0.midpoint(c1),
                c1.midpoint(c2),
                c2.midpoint(c0),
            ],
        }
    }

    /// Isoparametric map evaluated at (xi, eta).
    pub fn position(&self, xi: f64, eta: f64) -> Point {
        let n = shape_functions(xi, eta);
        let mut p = Point::new(0.0, 0.0);
        for i in 0..6 {
            p = p.add(self.nodes[i].scale(n[i]));
        }
        p
    }

    /// Jacobian matrix d(x,y)/d(xi,eta) at (xi, eta).
    pub fn jacobian(&self, xi: f64, eta: f64) -> Matrix2<f64> {
        let dn = shape_derivatives(xi, eta);
        let mut j = Matrix2::zeros();
        for i in 0..6 {
            j[(0, 0)] += dn[i][0] * self.nodes[i].x;
            j[(0, 1)] += dn[i][0] * self.nodes[i].y;
            j[(1, 0)] += dn[i][1] * self.nodes[i].x;
            j[(1, 1)] += dn[i][1] * self.nodes[i].y;
        }
        j
    }

    /// Strain-displacement matrix and Jacobian determinant at (xi, eta).
    /// DOF order is (u0, v0, u1, v1, ..., u5, v5).
    pub fn b_matrix(&self, xi: f64, eta: f64) -> Result<(BMat, f64)> {
        let j = self.jacobian(xi, eta);
        let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
        if det <= 0.0 {
            return Err(Error::NonPositiveJacobian {
                element: usize::MAX,
                det_j: det,
            });
        }
        let inv = Matrix2::new(j[(1, 1)], -j[(0, 1)], -j[(1, 0)], j[(0, 0)]) / det;
        let dn = shape_derivatives(xi, eta);
        let mut b = BMat::zeros();
        for i in 0..6 {
            let dx = inv[(0, 0)] * dn[i][0] + inv[(0, 1)] * dn[i][1];
            let dy = inv[(1, 0)] * dn[i][0] + inv[(1, 1)] * dn[i][1];
            b[(0, 2 * i)] = dx;
            b[(1, 2 * i + 1)] = dy;
            b[(2, 2 * i)] = dy;
            b[(2, 2 * i + 1)] = dx;
        }
        Ok((b, det))
    }

    /// Area by quadrature (exact for straight-sided elements).
    pub fn area(&self) -> f64 {
        tri_gauss_7()
            .iter()
            .map(|g| {
                let j = self.jacobian(g.xi, g.eta);
                g.weight * (j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)])
            })
            .sum()
    }
}

/// Shape functions at (xi, eta); L = (1 - xi - eta, xi, eta).
pub fn shape_functions(xi: f64, eta: f64) -> [f64; 6] {
    let l1 = 1.0 - xi - eta;
    let l2 = xi;
    let l3 = eta;
    [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ]
}

/// Shape function derivatives [dN/dxi, dN/deta] at (xi, eta).
pub fn shape_derivatives(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l1 = 1.0 - xi - eta;
    [
        [1.0 - 4.0 * l1, 1.0 - 4.0 * l1],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 * (l1 - xi), -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 * (l1 - eta)],
    ]
}

/// 12x12 element stiffness by 7-point quadrature.
pub fn element_stiffness(geom: &Tri6Geom, material: &Material) -> Result<Mat12> {
    let d = material.d_matrix();
    let mut k = Mat12::zeros();
    for g in tri_gauss_7() {
        let (b, det) = geom.b_matrix(g.xi, g.eta)?;
        k += b.transpose() * d * b * (det * g.weight);
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::material::PlaneMode;
    use approx::assert_relative_eq;

    fn unit_right_triangle() -> Tri6Geom {
        Tri6Geom::from_corners(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        )
    }

    #[test]
    fn shape_functions_partition_of_unity_and_kronecker() {
        let ref_nodes = [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (0.5, 0.0),
            (0.5, 0.5),
            (0.0, 0.5),
        ];
        for (i, (xi, eta)) in ref_nodes.iter().enumerate() {
            let n = shape_functions(*xi, *eta);
            for (j, nj) in n.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(*nj, expect, epsilon = 1e-14);
            }
        }
        let n = shape_functions(0.21, 0.37);
        assert_relative_eq!(n.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn shape_derivatives_match_finite_differences() {
        let h = 1e-7;
        for &(xi, eta) in &[(0.2, 0.3), (0.11, 0.52), (0.6, 0.15)] {
            let dn = shape_derivatives(xi, eta);
            let n_xp = shape_functions(xi + h, eta);
            let n_xm = shape_functions(xi - h, eta);
            let n_yp = shape_functions(xi, eta + h);
            let n_ym = shape_functions(xi, eta - h);
            for i in 0..6 {
                assert_relative_eq!(dn[i][0], (n_xp[i] - n_xm[i]) / (2.0 * h), epsilon = 1e-6);
                assert_relative_eq!(dn[i][1], (n_yp[i] - n_ym[i]) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric() {
        let mat = Material::new(3.7, 0.28, PlaneMode::PlaneStrain, 1.0).unwrap();
        let k = element_stiffness(&unit_right_triangle(), &mat).unwrap();
        let asym = (k - k.transpose()).norm();
        assert!(asym <= 1e-12 * k.norm());
    }

    #[test]
    fn stiffness_annihilates_rigid_modes() {
        let mat = Material::new(2.0e5, 0.3, PlaneMode::PlaneStress, 1.0).unwrap();
        let geom = Tri6Geom::from_corners(
            Point::new(0.3, -0.1),
            Point::new(1.7, 0.4),
            Point::new(0.6, 1.9),
        );
        let k = element_stiffness(&geom, &mat).unwrap();
        let mut modes = Vec::new();
        // Translations.
        let mut tx = [0.0f64; 12];
        let mut ty = [0.0f64; 12];
        // Rotation about origin: (u, v) = (-y, x).
        let mut rot = [0.0f64; 12];
        for i in 0..6 {
            tx[2 * i] = 1.0;
            ty[2 * i + 1] = 1.0;
            rot[2 * i] = -geom.nodes[i].y;
            rot[2 * i + 1] = geom.nodes[i].x;
        }
        modes.push(tx);
        modes.push(ty);
        modes.push(rot);
        for m in modes {
            let v = nalgebra::SVector::<f64, 12>::from_row_slice(&m);
            let kv = k * v;
            assert!(kv.norm() <= 1e-10 * k.norm() * v.norm());
        }
    }

    /// Independent oracle: integrate B' D B with a tensor-product Gauss rule
    /// collapsed onto the triangle (Duffy transform) and finite-difference
    /// shape gradients, sharing no code with the implementation path.
    fn stiffness_oracle(geom: &Tri6Geom, material: &Material) -> Mat12 {
        let d = material.d_matrix();
        // 12x12 Gauss-Legendre on the unit square, collapsed by
        // (xi, eta) = (s, t(1-s)) with Jacobian (1-s).
        let (pts, wts) = gauss_legendre_12();
        let mut k = Mat12::zeros();
        let fd = 1e-6;
        for (is, &s01) in pts.iter().enumerate() {
            for (it, &t01) in pts.iter().enumerate() {
                let s = 0.5 * (s01 + 1.0);
                let t = 0.5 * (t01 + 1.0);
                let w = wts[is] * wts[it] * 0.25 * (1.0 - s);
                let xi = s;
                let eta = t * (1.0 - s);
                // Finite-difference gradients of the shape functions in
                // physical coordinates via the inverse isoparametric map,
                // combined numerically.
                let grad = |i: usize| -> (f64, f64) {
                    let n_xp = shape_functions(xi + fd, eta)[i];
                    let n_xm = shape_functions(xi - fd, eta)[i];
                    let n_yp = shape_functions(xi, eta + fd)[i];
                    let n_ym = shape_functions(xi, eta - fd)[i];
                    let dxi = (n_xp - n_xm) / (2.0 * fd);
                    let deta = (n_yp - n_ym) / (2.0 * fd);
                    // Numerical Jacobian of the geometry map.
                    let pxp = geom.position(xi + fd, eta);
                    let pxm = geom.position(xi - fd, eta);
                    let pyp = geom.position(xi, eta + fd);
                    let pym = geom.position(xi, eta - fd);
                    let j00 = (pxp.x - pxm.x) / (2.0 * fd);
                    let j01 = (pxp.y - pxm.y) / (2.0 * fd);
                    let j10 = (pyp.x - pym.x) / (2.0 * fd);
                    let j11 = (pyp.y - pym.y) / (2.0 * fd);
                    let det = j00 * j11 - j01 * j10;
                    let dx = (j11 * dxi - j01 * deta) / det;
                    let dy = (-j10 * dxi + j00 * deta) / det;
                    (dx, dy)
                };
                let mut b = BMat::zeros();
                for i in 0..6 {
                    let (dx, dy) = grad(i);
                    b[(0, 2 * i)] = dx;
                    b[(1, 2 * i + 1)] = dy;
                    b[(2, 2 * i)] = dy;
                    b[(2, 2 * i + 1)] = dx;
                }
                let pxp = geom.position(xi + fd, eta);
                let pxm = geom.position(xi - fd, eta);
                let pyp = geom.position(xi, eta + fd);
                let pym = geom.position(xi, eta - fd);
                let j00 = (pxp.x - pxm.x) / (2.0 * fd);
                let j01 = (pxp.y - pxm.y) / (2.0 * fd);
                let j10 = (pyp.x - pym.x) / (2.0 * fd);
                let j11 = (pyp.y - pym.y) / (2.0 * fd);
                let det = j00 * j11 - j01 * j10;
                k += b.transpose() * d * b * (w * det);
            }
        }
        k
    }

    fn gauss_legendre_12() -> ([f64; 12], [f64; 12]) {
        // Nodes/weights for 12-point Gauss-Legendre on [-1, 1].
        let p = [
            0.125_233_408_511_469,
            0.367_831_498_998_180,
            0.587_317_954_286_617,
            0.769_902_674_194_305,
            0.904_117_256_370_475,
            0.981_560_634_246_719,
        ];
        let w = [
            0.249_147_045_813_403,
            0.233_492_536_538_355,
            0.203_167_426_723_066,
            0.160_078_328_543_346,
            0.106_939_325_995_318,
            0.047_175_336_386_512,
        ];
        let mut pts = [0.0; 12];
        let mut wts = [0.0; 12];
        for i in 0..6 {
            pts[i] = -p[i];
            wts[i] = w[i];
            pts[6 + i] = p[i];
            wts[6 + i] = w[i];
        }
        (pts, wts)
    }

    #[test]
    fn stiffness_matches_independent_quadrature_oracle() {
        // nu = 0 sits outside the validated open interval; build directly.
        let mat = Material {
            youngs_e: 1.0,
            poisson_nu: 0.0,
            mode: PlaneMode::PlaneStress,
            k_ic: 1.0,
        };
        let geom = unit_right_triangle();
        let k = element_stiffness(&geom, &mat).unwrap();
        let k_oracle = stiffness_oracle(&geom, &mat);
        let err = (k - k_oracle).norm() / k_oracle.norm();
        assert!(err < 1e-5, "relative deviation from oracle: {err:.3e}");
    }

    #[test]
    fn stiffness_matches_oracle_on_quarter_point_element() {
        let mat = Material::new(210.0, 0.3, PlaneMode::PlaneStrain, 1.0).unwrap();
        // Tip at origin, midside nodes on tip edges at the quarter position.
        let c0 = Point::new(0.0, 0.0);
        let c1 = Point::new(1.0, 0.0);
        let c2 = Point::new(0.7, 0.7);
        let geom = Tri6Geom::new([
            c0,
            c1,
            c2,
            c0.lerp(c1, 0.25),
            c1.midpoint(c2),
            c2.lerp(c0, 0.75),
        ]);
        let k = element_stiffness(&geom, &mat).unwrap();
        let k_oracle = stiffness_oracle(&geom, &mat);
        let err = (k - k_oracle).norm() / k_oracle.norm();
        // The integrand is singular at the collapsed node; both rules are
        // inexact there, so agreement is looser than the affine case.
        assert!(err < 2e-3, "relative deviation from oracle: {err:.3e}");
    }

    #[test]
    fn negative_jacobian_detected() {
        // Clockwise corners flip the Jacobian sign.
        let geom = Tri6Geom::from_corners(
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 0.0),
        );
        let mat = Material::new(1.0, 0.3, PlaneMode::PlaneStrain, 1.0).unwrap();
        assert!(element_stiffness(&geom, &mat).is_err());
    }
}
