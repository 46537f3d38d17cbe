//! Identification of the energy and flux relaxation kernels of a
//! one-dimensional heat equation with memory from boundary measurements.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deconv;
pub mod error;
pub mod experiment;
pub mod forward;
pub mod identify;
pub mod io;
pub mod kernelspace;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
