//! Lumped models of an allometrically scaled piezo-driven quadruped: scaling laws,
//! transmission dynamics, gait drive signals, a sagittal locomotion simulator,
//! performance metrics and concomitant current sensing.
//!
//! Models are generic over the scalar type. Scale-factor algebra works over any
//! ordered field ([`num::Field`], e.g. [`Rational`]); everything else needs a float
//! ([`num::Scalar`]). [`Real`] is the default instantiation.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Channel-indexed numeric loops read better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod gait;
pub mod io;
pub mod metrics;
pub mod num;
pub mod presets;
pub mod robot;
pub mod scaling;
pub mod sensing;
pub mod transmission;

pub use error::Error;
pub use gait::{GaitName, GaitProgram, Leg};
pub use robot::RobotSpec;

pub type Real = f64;
pub type Rational = num_rational::Ratio<i64>;

pub type Robot = RobotSpec<Real>;
pub type Program = GaitProgram<Real>;
pub type SimConfig = dynamics::SimConfig<Real>;
pub type Trajectory = dynamics::Trajectory<Real>;
pub type RunSummary = metrics::RunSummary<Real>;
