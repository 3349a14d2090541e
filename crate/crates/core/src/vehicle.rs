//! Point-mass longitudinal and kinematic-bicycle lateral plant at a fixed tick.

use serde::{Deserialize, Serialize};

use crate::error::WorldError;
use crate::geometry::Vec2;
use crate::path::WaypointPath;
use crate::scalar::{clamp, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams<T> {
    /// m/s² at full throttle.
    pub max_drive_accel: T,
    /// m/s² at full brake.
    pub max_brake_decel: T,
    /// Quadratic drag, 1/m.
    pub drag_coeff: T,
    /// Constant rolling resistance, m/s².
    pub rolling_resist: T,
    pub wheelbase: T,
    /// Steering angle at `steer = ±1`, degrees.
    pub max_steer_deg: T,
    /// First-order time constant of the brake actuator, s. Zero applies the
    /// command instantly.
    pub brake_lag: T,
    pub dt: T,
}

impl<T: Scalar> Default for DynamicsParams<T> {
    fn default() -> Self {
        let rolling = T::lit(0.3);
        // terminal speed of 13 m/s at throttle 0.7
        let drag = (T::lit(0.7 * 4.0) - rolling) / T::lit(169.0);
        Self {
            max_drive_accel: T::lit(4.0),
            max_brake_decel: T::lit(8.0),
            drag_coeff: drag,
            rolling_resist: rolling,
            wheelbase: T::lit(2.7),
            max_steer_deg: T::lit(35.0),
            brake_lag: T::lit(0.1),
            dt: T::lit(0.02),
        }
    }
}

impl<T: Scalar> DynamicsParams<T> {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            (self.max_drive_accel, "max_drive_accel"),
            (self.max_brake_decel, "max_brake_decel"),
            (self.wheelbase, "wheelbase"),
            (self.max_steer_deg, "max_steer_deg"),
            (self.dt, "dt"),
        ];
        for (v, name) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(format!("dynamics.{name} must be positive"));
            }
        }
        for (v, name) in [
            (self.drag_coeff, "drag_coeff"),
            (self.rolling_resist, "rolling_resist"),
            (self.brake_lag, "brake_lag"),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(format!("dynamics.{name} must be non-negative"));
            }
        }
        if self.max_steer_deg >= T::lit(90.0) {
            return Err("dynamics.max_steer_deg must be below 90".into());
        }
        Ok(())
    }

    pub fn max_steer_rad(&self) -> T {
        self.max_steer_deg.to_radians()
    }
}

/// Normalized actuator command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action<T> {
    pub throttle: T,
    pub brake: T,
    pub steer: T,
}

impl<T: Scalar> Action<T> {
    pub fn new(throttle: T, brake: T, steer: T) -> Self {
        Self { throttle, brake, steer }
    }

    /// Clamps into the actuator ranges; NaN components become zero.
    pub fn clamped(self) -> Self {
        let fix = |v: T, lo: T, hi: T| if v.is_nan() { T::zero() } else { clamp(v, lo, hi) };
        Self {
            throttle: fix(self.throttle, T::zero(), T::one()),
            brake: fix(self.brake, T::zero(), T::one()),
            steer: fix(self.steer, -T::one(), T::one()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
    pub v: T,
    pub a_lon: T,
    pub a_lat: T,
    /// Arc length of the pose's projection onto the assigned path.
    pub progress: T,
    /// Brake level currently applied by the actuator.
    pub brake_applied: T,
}

impl<T: Scalar> VehicleState<T> {
    /// At rest on `path` at arc length `s`, aligned with the path.
    pub fn on_path(path: &WaypointPath<T>, s: T, v: T) -> Self {
        let p = path.point_at(s);
        let seg = path.segment_at(s);
        Self {
            x: p.x,
            y: p.y,
            heading: path.segment_dir(seg).angle(),
            v,
            progress: s,
            ..Self::default()
        }
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }

    /// Segment index and fraction of the current progress.
    pub fn path_index(&self, path: &WaypointPath<T>) -> (usize, T) {
        let seg = path.segment_at(self.progress);
        let cum = path.cum_length();
        let len = cum[seg + 1] - cum[seg];
        (seg, (self.progress - cum[seg]) / len)
    }
}

/// Advances one tick.
pub fn step_vehicle<T: Scalar>(
    state: &VehicleState<T>,
    action: Action<T>,
    params: &DynamicsParams<T>,
    path: &WaypointPath<T>,
) -> VehicleState<T> {
    let a = action.clamped();
    let dt = params.dt;
    let brake_applied = if params.brake_lag > T::zero() {
        let k = (dt / params.brake_lag).min(T::one());
        state.brake_applied + (a.brake - state.brake_applied) * k
    } else {
        a.brake
    };
    let v = state.v;
    let a_cmd = a.throttle * params.max_drive_accel
        - brake_applied * params.max_brake_decel
        - params.rolling_resist
        - params.drag_coeff * v * v;
    let v_next = (v + a_cmd * dt).max(T::zero());
    let delta = a.steer * params.max_steer_rad();
    let heading = state.heading + v / params.wheelbase * delta.tan() * dt;
    let x = state.x + v_next * heading.cos() * dt;
    let y = state.y + v_next * heading.sin() * dt;
    let progress = path.project(Vec2::new(x, y)).arc_length;
    let mut next = VehicleState {
        x,
        y,
        heading,
        v: v_next,
        a_lon: T::zero(),
        a_lat: T::zero(),
        progress,
        brake_applied,
    };
    let (a_lon, a_lat) = measure_accels(state, &next, dt, path);
    next.a_lon = a_lon;
    next.a_lat = a_lat;
    next
}

/// Signed perpendicular offset from the path, positive to the left.
pub fn cross_track_error<T: Scalar>(state: &VehicleState<T>, path: &WaypointPath<T>) -> Result<T, WorldError> {
    path.cross_track_error(state.position())
}

/// Longitudinal acceleration from the realized speed change and lateral
/// acceleration from path curvature at the new progress.
pub fn measure_accels<T: Scalar>(
    prev: &VehicleState<T>,
    next: &VehicleState<T>,
    dt: T,
    path: &WaypointPath<T>,
) -> (T, T) {
    let a_lon = (next.v - prev.v) / dt;
    let a_lat = next.v * next.v * path.curvature_at(next.progress);
    (a_lon, a_lat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn straight() -> WaypointPath<f64> {
        WaypointPath::new((0..100).map(|i| Vec2::new(0.0, 2.0 * i as f64)).collect()).unwrap()
    }

    fn frictionless() -> DynamicsParams<f64> {
        DynamicsParams {
            max_brake_decel: 5.0,
            drag_coeff: 0.0,
            rolling_resist: 0.0,
            brake_lag: 0.0,
            ..DynamicsParams::default()
        }
    }

    #[test]
    fn rest_without_input_stays_at_rest() {
        let path = straight();
        let s = VehicleState::on_path(&path, 0.0, 0.0);
        let n = step_vehicle(&s, Action::default(), &DynamicsParams::default(), &path);
        assert_eq!(n.v, 0.0);
        assert_eq!(n.a_lon, 0.0);
    }

    #[test]
    fn full_brake_one_euler_step() {
        let path = straight();
        let s = VehicleState::on_path(&path, 10.0, 5.0);
        let n = step_vehicle(&s, Action::new(0.0, 1.0, 0.0), &frictionless(), &path);
        assert_abs_diff_eq!(n.v, 4.9, epsilon = 1e-12);
        assert_abs_diff_eq!(n.a_lon, -5.0, epsilon = 1e-9);
    }

    #[test]
    fn brake_lag_reaches_command_gradually() {
        let path = straight();
        let p = DynamicsParams::<f64>::default();
        let mut s = VehicleState::on_path(&path, 10.0, 6.0);
        s = step_vehicle(&s, Action::new(0.0, 1.0, 0.0), &p, &path);
        assert!(s.brake_applied > 0.0 && s.brake_applied < 1.0);
        for _ in 0..50 {
            s = step_vehicle(&s, Action::new(0.0, 1.0, 0.0), &p, &path);
        }
        assert!(s.brake_applied > 0.99);
    }

    #[test]
    fn terminal_speed_matches_closed_form() {
        let path = WaypointPath::new((0..3000).map(|i| Vec2::new(0.0, 2.0 * i as f64)).collect()).unwrap();
        let p = DynamicsParams::<f64>::default();
        let oracle = ((0.7 * p.max_drive_accel - p.rolling_resist) / p.drag_coeff).sqrt();
        let mut s = VehicleState::on_path(&path, 0.0, 0.0);
        for _ in 0..6000 {
            s = step_vehicle(&s, Action::new(0.7, 0.0, 0.0), &p, &path);
        }
        assert!((s.v - oracle).abs() / oracle < 0.01, "v {} vs {oracle}", s.v);
        assert_abs_diff_eq!(oracle, 13.0, epsilon = 1e-9);
    }

    #[test]
    fn stepping_is_bit_deterministic() {
        let path = straight();
        let p = DynamicsParams::<f64>::default();
        let s = VehicleState::on_path(&path, 3.0, 4.0);
        let a = Action::new(0.3, 0.1, 0.2);
        assert_eq!(step_vehicle(&s, a, &p, &path), step_vehicle(&s, a, &p, &path));
    }

    #[test]
    fn out_of_range_actions_are_clamped() {
        let a = Action::new(3.0, -1.0, f64::NAN).clamped();
        assert_eq!(a, Action::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn cross_track_sign_mirrors() {
        let path = straight();
        let mut s = VehicleState::on_path(&path, 10.0, 0.0);
        s.x = -0.5;
        assert_abs_diff_eq!(cross_track_error(&s, &path).unwrap(), 0.5, epsilon = 1e-12);
        s.x = 0.5;
        assert_abs_diff_eq!(cross_track_error(&s, &path).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn measured_accels() {
        let path = straight();
        let a = VehicleState::on_path(&path, 10.0, 3.0);
        assert_eq!(measure_accels(&a, &a, 0.02, &path), (0.0, 0.0));
        let mut b = a;
        b.v += 0.1;
        let (lon, _) = measure_accels(&a, &b, 0.02, &path);
        assert_abs_diff_eq!(lon, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn lateral_accel_on_arc() {
        let r = 12.0;
        let pts = (0..=30)
            .map(|k| {
                let th = k as f64 * std::f64::consts::FRAC_PI_2 / 30.0;
                Vec2::new(r * th.cos(), r * th.sin())
            })
            .collect();
        let path = WaypointPath::new(pts).unwrap();
        let mut s = VehicleState::on_path(&path, 5.0, 0.0);
        s.v = 6.0;
        let (_, lat) = measure_accels(&s, &s, 0.02, &path);
        // Menger curvature of chord vertices on a circle is exactly 1/r
        assert_abs_diff_eq!(lat, 3.0, epsilon = 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn coasting_never_speeds_up(v in 0.0f64..15.0, steer in -1.0f64..1.0) {
            let path = straight();
            let p = DynamicsParams::<f64>::default();
            let mut s = VehicleState::on_path(&path, 20.0, v);
            for _ in 0..20 {
                let n = step_vehicle(&s, Action::new(0.0, 0.0, steer), &p, &path);
                proptest::prop_assert!(n.v <= s.v);
                proptest::prop_assert!(n.v >= 0.0);
                s = n;
            }
        }
    }
}
