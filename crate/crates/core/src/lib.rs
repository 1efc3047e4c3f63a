//! Numerical workbench for spherical functions on `SL(n, R)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`rootsys`]: restricted root systems, Weyl groups, hull and
//!   hermiticity tests, minimal dominating parameters.
//! * [`groups`]: concrete `SL(n, R)` elements, Iwasawa and Cartan
//!   decompositions, the Haar density and K-quadrature.
//! * [`spherical`]: the Harish-Chandra integral for `phi_lambda`, the
//!   functional equation, two-sided envelopes and comparison scans.
//! * [`rms`]: the root-mean-square average over `K x K`, convolution of
//!   compactly supported test functions and the norms `||f||_(lambda)`.
//! * [`reps`]: the spherical principal series of `SL(2, R)` in the compact
//!   picture.

pub mod error;
pub mod groups;
pub mod quadrature;
pub mod reps;
pub mod rms;
pub mod rootsys;
pub mod spherical;

pub use error::{Error, Result};
