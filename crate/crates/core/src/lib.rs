//! Linear time-series forecasting models and the tools to compare them.
//!
//! Every model here (Linear, DLinear, FITS and their normalised variants
//! NLinear, RLinear, Linear+IN, FITS+IN) computes an affine map of its
//! context window, possibly with a bias scaled by the window's standard
//! deviation. The crate provides native forward passes, closed-form least
//! squares solutions for each model class, probing extraction of the
//! canonical affine form, and the FITS ↔ affine conversions.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
pub mod error;
pub mod linalg;
pub mod models;
pub mod solvers;
pub mod training;

pub use error::{Error, Result};
