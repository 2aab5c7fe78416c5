//! Linear-elastic FEM on 6-node triangle meshes: element matrices, global
//! assembly with symmetric Dirichlet elimination, direct sparse solve, and
//! Gauss-point stress evaluation.

mod assemble;
mod material;
mod quadrature;
mod solve;
mod stress;
mod tri6;

pub use assemble::{assemble, BcKind, BoundaryCondition, LinearSystem};
pub use material::{Material, PlaneMode};
pub use quadrature::{edge_gauss_3, tri_gauss_7, TriQuadPoint};
pub use solve::{solve, solve_with_fixed, DisplacementField, SparseSym};
pub use stress::{stress_at_gauss_points, ElementStress, GaussStress};
pub use tri6::{element_stiffness, shape_derivatives, shape_functions, Tri6Geom};
