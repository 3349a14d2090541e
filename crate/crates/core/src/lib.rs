//! Intersection simulator with a shielded, PPO-trained throttle policy.
//!
//! The ego vehicle performs an unprotected left turn across the lane of an
//! oncoming (north) vehicle that never yields. A rule-based emergency-brake
//! shield overrides the learned throttle whenever stopping before the
//! conflict waypoint can no longer be left to the policy.

pub mod error;
pub mod geometry;
pub mod path;
pub mod scalar;
pub mod world;
pub mod vehicle;
pub mod control;
pub mod safety;
pub mod nn;
pub mod rl;
pub mod config;
pub mod harness;

pub use error::{ConfigError, HarnessError, NnError, TrainError, WorldError};
pub use geometry::Vec2;
pub use scalar::Scalar;

/// Waypoint path in double precision, used by the simulator.
pub type Path = path::WaypointPath<f64>;
pub type Map = world::IntersectionMap<f64>;
