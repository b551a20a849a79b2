//! Numerics for the anti-holomorphic quadratic family `f_c(z) = conj(z)^2 + c`
//! and its connectedness locus, the tricorn.
//!
//! The crate is organised bottom-up:
//!
//! * [`family`]: the maps themselves, escape time and membership.
//! * [`rays`]: Green potential, Böttcher coordinate, dynamical and parameter rays.
//! * [`orbits`]: periodic points, multipliers and the real sequence `c_n`.
//! * [`koenigs`]: linearisation at the `beta` fixed point and the coefficients built on it.
//! * [`scaling`]: rescaled return maps around `c_n` and their limit.
//! * [`parabolic`]: Fatou coordinates, Ecalle heights, arc following and the strip test.
//! * [`geometry`]: point clouds of Julia sets and the estimates run on them.
//! * [`render`]: escape-time images.

// `!(x <= r)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dd;
pub mod error;
pub mod family;
pub mod geometry;
pub mod koenigs;
pub mod orbits;
pub mod par;
pub mod parabolic;
pub mod rays;
pub mod render;
pub mod scaling;

pub use error::{Error, Result};
pub use family::{AntiQuadratic, EscapeResult};
pub use num_complex::Complex64;
