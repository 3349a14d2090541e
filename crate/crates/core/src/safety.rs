//! Rule-based switch between the learned throttle and two fallbacks: the
//! brake PID, which stops the ego short of the conflict, and the throttle
//! PID, which carries a committed ego through it.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::path::WaypointPath;
use crate::scalar::Scalar;
use crate::vehicle::{Action, VehicleState};
use crate::world::{ConflictPoint, IntersectionMap};

/// Speeds at or below this count as stationary for time-to-reach.
pub const V_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShieldConfig<T> {
    /// Minimum time-to-reach lead of the ego over the north vehicle for a cut, s.
    pub ttr_threshold: T,
    /// Target deceleration while braking, m/s² (negative).
    pub a_lon_max: T,
    /// The ego stops this many waypoints before the conflict waypoint.
    pub stop_margin_waypoints: usize,
    /// Inflation of the junction box that defines "at the intersection", m.
    pub intersection_margin: T,
    /// How far past the stop waypoint a braking stop may still end, m. Beyond
    /// it the ego is committed to crossing and braking would leave it in the
    /// north lane.
    pub stop_tolerance: T,
    /// Once either vehicle is this far past the conflict waypoint the
    /// conflict is resolved, m.
    pub clearance: T,
}

impl<T: Scalar> Default for ShieldConfig<T> {
    fn default() -> Self {
        Self {
            ttr_threshold: T::lit(2.0),
            a_lon_max: T::lit(-5.0),
            stop_margin_waypoints: 12,
            intersection_margin: T::lit(50.0),
            stop_tolerance: T::lit(2.0),
            clearance: T::lit(4.5),
        }
    }
}

impl<T: Scalar> ShieldConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.ttr_threshold > T::zero()) {
            return Err("shield.ttr_threshold must be positive".into());
        }
        if !(self.a_lon_max < T::zero()) {
            return Err("shield.a_lon_max must be negative".into());
        }
        if self.stop_margin_waypoints < 1 {
            return Err("shield.stop_margin_waypoints must be at least 1".into());
        }
        for (v, name) in [
            (self.intersection_margin, "intersection_margin"),
            (self.stop_tolerance, "stop_tolerance"),
            (self.clearance, "clearance"),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(format!("shield.{name} must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chosen {
    /// Brake to a stop before the conflict.
    Safe,
    /// Too late to stop and the learned throttle is too timid: drive
    /// through with the fallback throttle.
    Clear,
    Learned,
}

/// The three candidate actions for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidates<T> {
    pub brake: Action<T>,
    pub clear: Action<T>,
    pub learned: Action<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShieldDecision<T> {
    pub chosen: Chosen,
    pub adas_active: bool,
    pub ttr_ego: T,
    pub ttr_north: T,
    pub d_safe: T,
    /// Ego arc distance to the conflict waypoint (negative once past).
    pub d_c_ego: T,
    /// Ego arc distance to the stop waypoint.
    pub d_stop: T,
}

/// Time to reach the conflict waypoint at the current speed.
pub fn ttr<T: Scalar>(d_c: T, v: T) -> T {
    if v <= T::lit(V_EPS) {
        T::infinity()
    } else {
        d_c.max(T::zero()) / v
    }
}

/// Distance needed to go from `v_i` to `v_f` at the constant (negative)
/// acceleration `a_lon_max`.
pub fn safe_distance<T: Scalar>(v_i: T, v_f: T, a_lon_max: T) -> Result<T, ConfigError> {
    if !(a_lon_max < T::zero()) {
        return Err(ConfigError::Invalid(format!("a_lon_max must be negative, got {a_lon_max}")));
    }
    Ok((v_f * v_f - v_i * v_i) / (T::lit(2.0) * a_lon_max))
}

/// Number of waypoints before the stop waypoint at which braking starts.
pub fn trigger_waypoints<T: Scalar>(d_safe: T, spacing: T) -> usize {
    let n = d_safe / spacing;
    // tolerate representation error right at an integer
    (n - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0)
}

pub fn at_intersection<T: Scalar>(state: &VehicleState<T>, map: &IntersectionMap<T>, margin: T) -> bool {
    map.in_junction(state.position(), margin)
}

/// Index of the waypoint the ego must stop at.
pub fn stop_index(conflict: &ConflictPoint<impl Scalar>, margin: usize) -> usize {
    conflict.ego_index.saturating_sub(margin)
}

/// Per-tick arbitration. Returns the decision and the action handed to the plant.
///
/// `braking` is whether the previous tick chose [`Chosen::Safe`]. A stop in
/// progress is held until the conflict resolves, even if the ego slides out
/// of the stopping window on the way. An ego past the window that has lost
/// its time-to-reach lead gets at least the fallback throttle; the shield
/// only counts as active when that floor is above the learned throttle.
#[allow(clippy::too_many_arguments)]
pub fn shield_step<T: Scalar>(
    cfg: &ShieldConfig<T>,
    ego: &VehicleState<T>,
    north: &VehicleState<T>,
    ego_path: &WaypointPath<T>,
    north_path: &WaypointPath<T>,
    conflict: &ConflictPoint<T>,
    actions: Candidates<T>,
    both_at_intersection: bool,
    braking: bool,
) -> (ShieldDecision<T>, Action<T>) {
    let d_c_ego = ego_path.cum_length()[conflict.ego_index] - ego.progress;
    let d_c_north = north_path.cum_length()[conflict.north_index] - north.progress;
    let d_stop = ego_path.cum_length()[stop_index(conflict, cfg.stop_margin_waypoints)] - ego.progress;
    let ttr_ego = ttr(d_c_ego, ego.v);
    let ttr_north = ttr(d_c_north, north.v);
    let d_safe = (ego.v * ego.v) / (T::lit(-2.0) * cfg.a_lon_max);

    let unresolved = both_at_intersection && d_c_ego > -cfg.clearance && d_c_north > -cfg.clearance;
    let threat = unresolved && !(ttr_north - ttr_ego > cfg.ttr_threshold);
    let overshoot = d_safe - d_stop;
    let in_window = d_safe >= d_stop && overshoot <= cfg.stop_tolerance;

    let chosen = if (threat && in_window) || (braking && unresolved) {
        Chosen::Safe
    } else if threat && overshoot > cfg.stop_tolerance && actions.clear.throttle > actions.learned.throttle {
        Chosen::Clear
    } else {
        Chosen::Learned
    };
    let decision = ShieldDecision {
        chosen,
        adas_active: chosen != Chosen::Learned,
        ttr_ego,
        ttr_north,
        d_safe,
        d_c_ego,
        d_stop,
    };
    let action = match chosen {
        Chosen::Safe => actions.brake,
        Chosen::Clear => actions.clear,
        Chosen::Learned => actions.learned,
    };
    (decision, action)
}
