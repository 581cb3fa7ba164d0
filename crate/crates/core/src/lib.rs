//! Numerical laboratory for isometry-invariant Sobolev embeddings on
//! constant-curvature model spaces and their Randers perturbations.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: Gauss–Legendre rules, adaptive quadrature with divergence
//!   detection, Gamma and Beta functions.
//! * [`modelspace`]: Euclidean space and the Poincaré ball, comparison volumes,
//!   exponential maps, the Croke constant.
//! * [`randers`]: Randers metrics `F = sqrt(g) + beta`, their polar transform,
//!   volume density, gradient and the Funk model.
//! * [`orbits`]: orbit packings `m(y, rho)`, orbit diameters and Hausdorff
//!   measures of orbits.
//! * [`rearrange`]: radial profiles, level sets, Euclidean rearrangement and
//!   the Pólya–Szegő inequality.
//! * [`sobolev`]: admissible exponent pairs, Sobolev norms, embedding constants,
//!   Funk counterexample verdicts.
//! * [`pde`]: the radial quasilinear problem, its energy and a multi-start
//!   critical point search.
//! * [`cli`]: the batch front-end.

pub mod cli;
pub mod error;
pub mod modelspace;
pub mod numerics;
pub mod orbits;
pub mod pde;
pub mod randers;
pub mod rearrange;
pub mod sobolev;

pub use error::{Error, Result};

pub use numerics::{Exponent, Extended};


