//! Numerical toolkit for the Choi–Jamiołkowski calculus of linear maps on
//! `M_n`: Choi matrices, cones of positive maps with three-valued membership
//! oracles, operator-system structures on `M_n`, and mapping-cone checks.
//!
//! Everything is dense and aimed at `n = 2..4`.

pub mod cones;
pub mod config;
pub mod error;
pub mod mapcone;
pub mod matrix;
pub mod opsys;
pub mod choi;
pub mod rng;
pub mod suites;

pub use config::{SearchOpts, Tolerances};
pub use error::{Error, Result};
pub use choi::{KrausPair, LinMap};
pub use matrix::{CMat, C64};
