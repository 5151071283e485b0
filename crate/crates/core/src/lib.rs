//! Low-thrust orbit transfer guidance with the Q-law family of Lyapunov
//! feedback controllers.
//!
//! The crate is organised bottom-up:
//!
//! * [`elements`] — classical orbital elements, Cartesian conversion, targets;
//! * [`dynamics`] — Gauss variational equations, J2, mass flow;
//! * [`sun`] — sun direction and cylindrical shadow;
//! * [`classic`] — the classical Q-law;
//! * [`modified`] — the modified, Lyapunov-stable Q-law;
//! * [`guidance`] — thrust direction, effectivity-based coasting, convergence;
//! * [`propagator`] — fixed-step RK4 closed-loop simulation;
//! * [`tuner`] — particle-swarm weight tuning and Pareto sweeps;
//! * [`scenario_file`] — JSON scenario files and built-in presets;
//! * [`validate`] — self-contained oracle checks.

pub mod classic;
pub mod constants;
pub mod dynamics;
pub mod elements;
pub mod error;
pub mod guidance;
pub mod modified;
pub mod propagator;
pub mod scenario_file;
pub mod sun;
pub mod tuner;
pub mod validate;

pub use error::{QlawError, Result};
