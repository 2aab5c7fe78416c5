//! Gauss quadrature rules.
//!
//! The triangle rule is the 7-point degree-5 rule, applied uniformly: the
//! quarter-point tip elements are geometrically distorted, so affine-exact
//! rules would under-integrate them.

/// Quadrature point in reference-triangle coordinates (xi, eta), with weight
/// normalized so the weights sum to the reference area 1/2.
#[derive(Debug, Clone, Copy)]
pub struct TriQuadPoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// 7-point degree-5 rule on the reference triangle {xi >= 0, eta >= 0, xi + eta <= 1}.
pub fn tri_gauss_7() -> [TriQuadPoint; 7] {
    const W_CENTROID: f64 = 0.225;
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    let p = |xi: f64, eta: f64, w: f64| TriQuadPoint {
        xi,
        eta,
        weight: 0.5 * w,
    };
    [
        p(1.0 / 3.0, 1.0 / 3.0, W_CENTROID),
        p(A1, B1, W1),
        p(B1, A1, W1),
        p(B1, B1, W1),
        p(A2, B2, W2),
        p(B2, A2, W2),
        p(B2, B2, W2),
    ]
}

/// 3-point Gauss-Legendre rule on [-1, 1] (degree 5), for edge tractions on
/// quadratic edges.
pub fn edge_gauss_3() -> [(f64, f64); 3] {
    let s = (3.0f64 / 5.0).sqrt();
    [(-s, 5.0 / 9.0), (0.0, 8.0 / 9.0), (s, 5.0 / 9.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Integrate xi^p eta^q over the reference triangle; exact value is
    /// p! q! / (p + q + 2)!.
    fn monomial_exact(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn triangle_rule_exact_to_degree_5() {
        for p in 0..=5u32 {
            for q in 0..=(5 - p) {
                let num: f64 = tri_gauss_7()
                    .iter()
                    .map(|g| g.weight * g.xi.powi(p as i32) * g.eta.powi(q as i32))
                    .sum();
                assert_relative_eq!(num, monomial_exact(p, q), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn edge_rule_exact_to_degree_5() {
        for p in 0..=5u32 {
            let num: f64 = edge_gauss_3()
                .iter()
                .map(|(s, w)| w * s.powi(p as i32))
                .sum();
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert_relative_eq!(num, exact, epsilon = 1e-14);
        }
    }
}
