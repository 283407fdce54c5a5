//! Learning halfspaces under Massart label noise with Gaussian marginals.
//!
//! The crate implements two learners and the synthetic machinery needed to
//! exercise them end to end:
//!
//! * a biased random walk over candidate directions that tolerates noise
//!   rates all the way up to 1/2 on positive-mass regions ([`walk`]),
//! * a projected online-gradient-descent learner driven by a polynomial
//!   certificate oracle ([`ogd`], [`certificate`]),
//! * noise models and samplers for Massart-corrupted halfspace labels
//!   ([`instance`]),
//! * moment-matching noise profiles that hide a direction from low-degree
//!   moment queries, together with their samplers ([`hard`]),
//! * the Gaussian-measure numerical kernels everything above rests on:
//!   Hermite polynomials, exact monomial moments, Gauss-Hermite and
//!   Gauss-Legendre quadrature ([`gauss`], [`poly`]).
//!
//! Everything is deterministic given explicit seeds. The crate is
//! `no_std`-compatible (with `alloc`); the `std` feature (on by default)
//! enables rayon-parallel inner loops.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod certificate;
pub mod chow;
pub mod error;
pub mod gauss;
pub mod hard;
pub mod instance;
pub mod multi_index;
pub mod ogd;
pub mod poly;
pub mod sign_match;
pub mod walk;

pub use error::{Error, Result};
