//! Simulation of single-photon (SPAD) camera captures from HDR radiance maps,
//! and the tooling to turn a directory of `.hdr` files into paired training
//! data and score model predictions against it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hdr_io;
pub mod metrics;
pub mod pipeline;
pub mod radiometry;
pub mod spad;
pub mod tonemap;

pub use error::{Error, Result};
