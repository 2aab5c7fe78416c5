//! Isotropic linear-elastic material under plane strain or plane stress.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneMode {
    PlaneStrain,
    PlaneStress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub youngs_e: f64,
    pub poisson_nu: f64,
    pub mode: PlaneMode,
    /// Mode-I fracture toughness (propagation threshold for the equivalent SIF).
    pub k_ic: f64,
}

impl Material {
    pub fn new(youngs_e: f64, poisson_nu: f64, mode: PlaneMode, k_ic: f64) -> Result<Self> {
        let m = Material {
            youngs_e,
            poisson_nu,
            mode,
            k_ic,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_e > 0.0) {
            return Err(Error::Parse(format!(
                "youngs_modulus must be > 0, got {}",
                self.youngs_e
            )));
        }
        if !(self.poisson_nu > 0.0 && self.poisson_nu < 0.5) {
            return Err(Error::Parse(format!(
                "poisson_nu must lie in (0, 0.5), got {}",
                self.poisson_nu
            )));
        }
        if !(self.k_ic > 0.0) {
            return Err(Error::Parse(format!(
                "fracture_toughness must be > 0, got {}",
                self.k_ic
            )));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs_e / (2.0 * (1.0 + self.poisson_nu))
    }

    /// Kolosov constant: 3 - 4nu (plane strain) or (3 - nu)/(1 + nu) (plane stress).
    pub fn kolosov(&self) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => 3.0 - 4.0 * self.poisson_nu,
            PlaneMode::PlaneStress => (3.0 - self.poisson_nu) / (1.0 + self.poisson_nu),
        }
    }

    /// Constitutive matrix for Voigt vectors (sigma_xx, sigma_yy, tau_xy) =
    /// D (eps_xx, eps_yy, gamma_xy).
    pub fn d_matrix(&self) -> Matrix3<f64> {
        let e = self.youngs_e;
        let nu = self.poisson_nu;
        match self.mode {
            PlaneMode::PlaneStrain => {
                let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
                Matrix3::new(
                    c * (1.0 - nu), c * nu,         0.0,
                    c * nu,         c * (1.0 - nu), 0.0,
                    0.0,            0.0,            c * (1.0 - 2.0 * nu) / 2.0,
                )
            }
            PlaneMode::PlaneStress => {
                let c = e / (1.0 - nu * nu);
                Matrix3::new(
                    c,      c * nu, 0.0,
                    c * nu, c,      0.0,
                    0.0,    0.0,    c * (1.0 - nu) / 2.0,
                )
            }
        }
    }

    /// Compliance matrix (inverse of [`Material::d_matrix`]); used by the
    /// energy-norm error estimator.
    pub fn compliance(&self) -> Matrix3<f64> {
        self.d_matrix()
            .try_inverse()
            .expect("constitutive matrix is invertible for valid material")
    }

    /// Out-of-plane stress for plane strain (zero for plane stress).
    pub fn sigma_zz(&self, sigma_xx: f64, sigma_yy: f64) -> f64 {
        match self.mode {
            PlaneMode::PlaneStrain => self.poisson_nu * (sigma_xx + sigma_yy),
            PlaneMode::PlaneStress => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kolosov_constants() {
        let ps = Material::new(1.0, 0.25, PlaneMode::PlaneStrain, 1.0).unwrap();
        assert_relative_eq!(ps.kolosov(), 2.0);
        let pstress = Material::new(1.0, 0.25, PlaneMode::PlaneStress, 1.0).unwrap();
        assert_relative_eq!(pstress.kolosov(), 2.2);
    }

    #[test]
    fn d_matrix_inverts() {
        let m = Material::new(200e9, 0.3, PlaneMode::PlaneStrain, 1e6).unwrap();
        let d = m.d_matrix();
        let c = m.compliance();
        let id = d * c;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(id[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_invalid_poisson() {
        assert!(Material::new(1.0, 0.5, PlaneMode::PlaneStrain, 1.0).is_err());
        assert!(Material::new(1.0, -0.1, PlaneMode::PlaneStrain, 1.0).is_err());
    }
}
