//! Design and simulation toolkit for force-balanced five-bar-linkage
//! manipulators.
//!
//! - [`model`]: mechanism description, forward and loop-closure kinematics.
//! - [`balance`]: force-balance residuals and the counter-mass solver.
//! - [`ik`]: closed-form planar and spatial inverse kinematics.
//! - [`trajectory`]: Hermite splines, trapezoidal time scaling, built-ins.
//! - [`dynamics`]: joint torques and base reaction wrench.
//! - [`workspace`]: joint limits, workspace tracing, toroid volume.
//! - [`harness`]: balanced/unbalanced experiment runs and reports.

pub mod balance;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ik;
pub mod model;
pub mod trajectory;
pub mod workspace;

pub use error::{Error, Result};
