//! Fixed-point iteration laboratory on finite-dimensional `ℓ_p` spaces.
//!
//! One parametric engine runs the two-step extended process; Mann, Ishikawa,
//! Halpern, viscosity, with-errors and three-term schemes are instances of
//! it. The anchor solver follows the implicit path `z_t = t f(z_t) + (1−t) T z_t`
//! to estimate its limit as `t → 0`.

pub mod anchor;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod operators;
pub mod schedules;
pub mod space;
pub mod suites;

pub use error::{Error, Result};
