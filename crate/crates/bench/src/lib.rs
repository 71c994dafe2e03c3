//! Fixtures shared by the benchmarks under `benches/`.

use std::f64::consts::PI;

use polaron_core::{LatticeSpec, PhysParams};

/// `M = 2`, `E_B = −1`, `L = 10` at the given `μ/|E_B|`.
pub fn band_point(mu_tilde: f64) -> PhysParams {
    PhysParams::from_mu_tilde(2.0, -1.0, mu_tilde, 10.0).expect("valid parameters")
}

/// Unit lattice with only the origin in the Fermi sea.
pub fn single_mode() -> PhysParams {
    PhysParams::new(2.0, -1.0, 0.5, LatticeSpec::new(2.0 * PI).expect("valid box")).expect("valid parameters")
}
