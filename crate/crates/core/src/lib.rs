//! Pulsating fronts in spatially periodic bistable and multistable
//! reaction-diffusion equations `u_t = Laplacian u + f(x, u)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod cli;
pub mod design;
pub mod error;
pub mod frontmetrics;
pub mod reaction;
pub mod solver;
pub mod spectra;

pub use error::{Error, Result};
