//! Numerical laboratory for periodic Lieb–Thirring constants.
//!
//! * [`lattice`]: unit-covolume Bravais lattices, cell and Brillouin-zone grids,
//!   plane-wave index sets.
//! * [`elliptic`]: Jacobi/Weierstrass functions and the exactly solvable Lamé family.
//! * [`bloch`]: plane-wave Bloch solver, Riesz means and potential integrals.
//! * [`constants`]: semiclassical and one-bound-state constants.
//! * [`scf`]: fixed-point maximization of the band-restricted Riesz mean at fixed
//!   potential norm, sweeps over the norm and critical-exponent search.

pub mod bloch;
pub mod constants;
pub mod elliptic;
pub mod error;
pub mod format;
pub mod lattice;
pub mod quad;
pub mod scf;

pub use error::{LtError, Result};
pub use lattice::{Lattice, LatticeKind};
