//! Joint trajectory optimization for groups of vehicles with user-selected
//! pairwise interaction topology.
//!
//! Each vehicle follows a piecewise quintic trajectory parameterized by
//! waypoints and piece durations ([`trajectory`]). Pairwise interaction is
//! measured by the signed areal velocity of the relative position at the
//! instant of closest approach ([`topology`]); requesting clockwise or
//! counterclockwise passing turns into a hinge penalty added to the control
//! effort, time, kinodynamic and collision terms ([`costs`]). The resulting
//! unconstrained problem is minimized with L-BFGS in two stages ([`solver`]).

pub mod costs;
pub mod error;
pub mod gradcheck;
pub mod scenario;
pub mod solver;
pub mod topology;
pub mod trajectory;

pub use error::{Error, Result};

/// Planar vector used for positions and their derivatives.
pub type Vec2 = nalgebra::Vector2<f64>;
