//! Simulation and reconstruction laboratory for an inverse boundary value
//! problem of a self-adjoint hyperbolic operator
//!
//!   u_tt + Σ (1/√g)(-i∂_j + A_j) √g g^{jk} (-i∂_k + A_k) u + V u = 0,
//!
//! posed on a grid box with Dirichlet driving on a patch of the face x_n = 0.
//! The crate synthesizes time-dependent Dirichlet-to-Neumann (D-to-N) data on
//! the patch from known coefficients, and reconstructs the tangential metric
//! block, the magnetic potential and the electric potential in a collar
//! neighborhood of the patch from that data alone, by restricting solutions
//! to characteristic surfaces s = t - y_n = const.
//!
//! Pipeline stages, each its own module:
//!
//! * [`coeff`]    - coefficient fields, gauge and diffeomorphism actions
//! * [`solver`]   - leapfrog time-domain solver, Neumann traces, energy
//! * [`chart`]    - semi-geodesic (boundary normal) coordinates
//! * [`normal_form`] - reduction to the normal-form operator L1
//! * [`dtn`]      - D-to-N datasets: assembly, transforms, propagation
//! * [`control`]  - boundary forms, regularized Galerkin projection
//! * [`optics`]   - high-frequency probes and point extraction on
//!                  characteristic planes
//! * [`recovery`] - pointwise linear systems and coefficient unpacking
//!
//! File formats (binary container, text fields, dataset manifests, TOML
//! experiment configs) live in [`container`], [`manifest`] and [`config`];
//! their readers are hardened against malformed input and are exercised by
//! the fuzz targets under `fuzz/`.

pub mod chart;
pub mod coeff;
pub mod config;
pub mod container;
pub mod control;
pub mod dtn;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod manifest;
pub mod normal_form;
pub mod optics;
pub mod recovery;
pub mod signal;
pub mod solver;

pub use error::{Error, ErrorKind, Result};

/// Complex scalar used throughout the solvers and forms.
pub type C64 = num_complex::Complex<f64>;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}
