//! Numerical laboratory for self-shrinkers of mean curvature flow.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! - [`sphere`]: height functions and the longitude chart on Sⁿ with exact Hessians.
//! - [`grassmann`]: w-product, Jordan angles, the v-function on G(n,m) and its
//!   closed-form derivatives.
//! - [`immersion`]: second fundamental form, shrinker residual, Gauss map, weighted
//!   tension field, drift Laplacian, Gaussian-weighted quadrature and a catalog of
//!   exact self-shrinkers.
//! - [`graph`]: the graphic shrinker system on a tensor grid and its relaxation.
//! - [`inequality`]: the grouped quadratic form behind the slope-below-3 rigidity
//!   estimate, the scalar sweep of F on Ω, and randomized/adversarial certification.
//!
//! IO, the CLI and file formats live in the companion `shrinker-lab` crate.

#![no_std]
// Index loops mirror the tensor notation; `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fd;
pub mod graph;
pub mod grassmann;
pub mod immersion;
pub mod inequality;
pub mod linalg;
pub mod sphere;

pub use error::{Error, Result};
