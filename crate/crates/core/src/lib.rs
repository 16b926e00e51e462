//! Certified and semi-rigorous lower bounds for the integral means spectrum
//! of random conformal snowflakes built from radial slit maps.
//!
//! The pipeline:
//!
//! * [`conformal`] evaluates the slit building block, its inverse and the
//!   critical radius of the associated annulus;
//! * [`transfer`] discretizes the transfer operator and extracts its Perron
//!   eigenpair by power iteration;
//! * [`bounds`] turns eigenvectors into test functions and evaluates
//!   `min Pν/ν`, the lower bound for β(t), and drives parameter sweeps;
//! * [`certificate`] is the rigorous t = 1 pipeline with certified
//!   quadrature and Lipschitz error terms;
//! * [`render`] traces snowflake approximations and Green's lines to SVG.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod certificate;
pub mod conformal;
pub mod error;
pub mod jet;
pub mod quadrature;
pub mod render;
pub mod table;
pub mod test_function;
pub mod transfer;

pub use error::{Error, Result};
pub use num_complex::Complex64;
