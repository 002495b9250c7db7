//! Numerical isomonodromic deformation of the generalized Lame equation
//! `y'' = I(z) y` on a complex torus.

#![allow(clippy::needless_range_loop)]

pub mod collapse;
pub mod correspondence;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod hitchin;
pub mod lame;
pub mod monodromy;
pub mod numerics;
pub mod ode;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
