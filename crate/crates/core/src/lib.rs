//! Spectra and counting-function bounds for higher-order Krein--von Neumann
//! Laplacians `(-Δ)^m` on finite-volume open sets.
//!
//! The positive Krein spectrum is computed through the buckling pencil
//! `A x = λ B x`, where `A` discretizes the form `(S f, S g)` and `B` the form
//! `(f, S g)` on a conforming trial space of interior B-splines. Counting
//! functions come from Sylvester inertia of the shifted pencil, and the
//! closed-form counting bound is evaluated and independently re-derived by
//! quadrature in [`bounds`].
//!
//! Modules:
//! - [`linalg`]: dense symmetric factorizations, Jacobi eigensolver, inertia counts
//! - [`basis`]: interior tensor-product B-spline trial spaces
//! - [`forms`]: assembly of the pencil and mass matrices
//! - [`spectra`]: pencil solves, counting curves, 1D transcendental oracles
//! - [`bounds`]: unit-ball volumes, counting-bound constants, Weyl leading term

pub mod basis;
pub mod bounds;
pub mod forms;
pub mod linalg;
pub mod spectra;

/// Formats a float with 12 significant digits, locale-independent.
///
/// Shared by the matrix dump format and the CLI's CSV emission so that
/// identical inputs produce byte-identical output.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}
