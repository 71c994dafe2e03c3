//! Numerics for a heavy impurity in a two-dimensional Fermi gas on a
//! periodic box.
//!
//! Units: `ħ = 1` and fermion mass `½`, so a fermion of momentum `k` has
//! kinetic energy `k²`. The impurity has mass ratio `M`, the two-body bound
//! state sits at `E_B < 0` and the Fermi sea fills every mode with `k² ≤ μ`.
//!
//! - [`lattice`]: the momentum lattice `(2π/L)ℤ²`, shell enumeration and
//!   sum-versus-integral bounds.
//! - [`gfunc`]: the renormalized pair function `G(q, τ)` and its continuum form.
//! - [`polaron`]: the polaron and perturbed polaron equations.
//! - [`stability`]: the mass-ratio stability functional and critical mass.
//! - [`certify`]: randomized and grid certificate suites.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod certify;
pub mod error;
pub mod gfunc;
pub mod lattice;
pub mod polaron;
pub mod quad;
pub mod roots;
pub mod stability;
pub mod sum;

pub use certify::{CertifyOptions, Suite, SuiteReport};
pub use error::{Error, Result};
pub use gfunc::{GEvaluation, GOptions, PhysParams, TailPolicy};
pub use lattice::LatticeSpec;
pub use polaron::{Kernel, PerturbedSolution, PolaronSolution, SolverOptions};
pub use stability::{CriticalMass, StabilityResult};
