//! Discrete PID with integral clamping, plus the three loops built on it.

use serde::{Deserialize, Serialize};

use crate::path::WaypointPath;
use crate::scalar::{clamp, Scalar};
use crate::vehicle::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidConfig<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
    pub out_min: T,
    pub out_max: T,
    pub dt: T,
    /// Time constant of a first-order low-pass on the derivative term, s.
    /// Zero leaves the derivative unfiltered.
    #[serde(default)]
    pub derivative_filter: T,
}

impl<T: Scalar> PidConfig<T> {
    fn gains(kp: f64, ki: f64, kd: f64, lo: f64, hi: f64) -> Self {
        Self {
            kp: T::lit(kp),
            ki: T::lit(ki),
            kd: T::lit(kd),
            out_min: T::lit(lo),
            out_max: T::lit(hi),
            dt: T::lit(0.02),
            derivative_filter: T::zero(),
        }
    }

    /// Brake loop on longitudinal deceleration.
    pub fn braking() -> Self {
        Self {
            derivative_filter: T::lit(0.5),
            ..Self::gains(0.3, 0.40, 0.1, 0.0, 1.0)
        }
    }

    /// Throttle loop on speed error.
    pub fn throttle() -> Self {
        Self::gains(1.5, 0.05, 0.002, 0.0, 0.7)
    }

    /// Steering loop on lateral deviation.
    pub fn lane_keeping() -> Self {
        Self::gains(0.2, 0.01, 0.02, -1.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.out_min < self.out_max) {
            return Err("out_min must be below out_max".into());
        }
        if !(self.dt > T::zero()) {
            return Err("dt must be positive".into());
        }
        if !(self.derivative_filter >= T::zero()) {
            return Err("derivative_filter must be non-negative".into());
        }
        for g in [self.kp, self.ki, self.kd] {
            if !g.is_finite() {
                return Err("gains must be finite".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState<T> {
    pub integral: T,
    pub prev_error: T,
    /// Filtered derivative of the error.
    pub derivative: T,
    pub initialized: bool,
}

/// One controller update. Pure: the new state is returned.
pub fn pid_step<T: Scalar>(cfg: &PidConfig<T>, state: &PidState<T>, error: T) -> (T, PidState<T>) {
    let mut integral = state.integral + error * cfg.dt;
    if cfg.ki != T::zero() {
        let a = cfg.out_min / cfg.ki;
        let b = cfg.out_max / cfg.ki;
        integral = clamp(integral, a.min(b), a.max(b));
    }
    let derivative = if state.initialized {
        let raw = (error - state.prev_error) / cfg.dt;
        if cfg.derivative_filter > T::zero() {
            let k = cfg.dt / (cfg.derivative_filter + cfg.dt);
            state.derivative + (raw - state.derivative) * k
        } else {
            raw
        }
    } else {
        T::zero()
    };
    let u = cfg.kp * error + cfg.ki * integral + cfg.kd * derivative;
    let next = PidState {
        integral,
        prev_error: error,
        derivative,
        initialized: true,
    };
    (clamp(u, cfg.out_min, cfg.out_max), next)
}

/// Brake command that drives the measured deceleration towards `a_lon_max`
/// (negative). Error is `a_lon_measured - a_lon_max`: too little deceleration
/// gives a positive error and more brake.
pub fn safety_brake<T: Scalar>(
    cfg: &PidConfig<T>,
    state: &PidState<T>,
    a_lon_measured: T,
    a_lon_max: T,
) -> (T, PidState<T>) {
    pid_step(cfg, state, a_lon_measured - a_lon_max)
}

pub fn throttle_tracking<T: Scalar>(cfg: &PidConfig<T>, state: &PidState<T>, v: T, v_lim: T) -> (T, PidState<T>) {
    pid_step(cfg, state, v_lim - v)
}

/// Steering from a lateral error; a positive error (vehicle left of its
/// path) steers right.
pub fn lka_steering<T: Scalar>(cfg: &PidConfig<T>, state: &PidState<T>, lka_error: T) -> (T, PidState<T>) {
    let (u, next) = pid_step(cfg, state, lka_error);
    (clamp(-u, -T::one(), T::one()), next)
}

/// Lateral error measured at a preview point `lookahead` metres ahead on the
/// path: the right-hand offset of that point in the vehicle frame. Equals the
/// cross-track error for a vehicle aligned with a straight path.
pub fn preview_error<T: Scalar>(state: &VehicleState<T>, path: &WaypointPath<T>, lookahead: T) -> T {
    let target = path.point_at(state.progress + lookahead);
    let rel = target - state.position();
    let dir = crate::geometry::Vec2::from_angle(state.heading);
    -dir.cross(rel)
}
