//! Polymer stretching by a Kraichnan-type transport noise: shell-truncated
//! noise fields, their covariance correctors, Lagrangian Monte Carlo for the
//! pre-limit and limit dumbbell SDEs, a radial Fokker–Planck solver and
//! heavy-tail statistics.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covariance;
pub mod error;
pub mod kahan;
pub mod lagrangian;
pub mod quad;
pub mod radial_fp;
pub mod rng;
pub mod shell_noise;
pub mod tail_stats;
pub mod tensor;

pub use covariance::{LimitParams, StationaryDensity};
pub use error::{Error, Result};
pub use lagrangian::{run_ensemble, EnsembleStats, Model, PolymerState, SimParams, VelocityField};
pub use radial_fp::{RadialField, RadialGrid, Stepping};
pub use shell_noise::{enumerate_shell, NoiseModel, ShellMode};
pub use tail_stats::{hill_fit, TailFit};
pub use tensor::{Tensor2, Vec2};
