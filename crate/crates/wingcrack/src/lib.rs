//! 2D quasi-static simulation of wing-crack initiation, growth and coalescence
//! from pre-existing frictional fractures.
//!
//! The library combines:
//! - linear-elastic FEM on unstructured 6-node triangle meshes, with collapsed
//!   quarter-point elements at fracture tips ([`fem`], [`mesh`]),
//! - frictional fracture contact under KKT/Coulomb conditions, solved by a
//!   primal-dual active-set iteration ([`contact`]),
//! - mixed-mode stress intensity factor extraction and maximum tangential
//!   stress propagation ([`lefm`]),
//! - Zienkiewicz-Zhu error estimation and remeshing around advancing tips
//!   ([`adaptivity`]),
//! - a scenario driver with a small CLI ([`scenario`]).
//!
//! Start with the runnable examples (`cargo run --example griffith_k1`, etc.)
//! or the [`scenario`] module for file-driven runs.

pub mod adaptivity;
pub mod contact;
pub mod error;
pub mod fem;
pub mod fracture;
pub mod geometry;
pub mod lefm;
pub mod mesh;
pub mod oracles;
pub mod scenario;
pub mod vtk;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
