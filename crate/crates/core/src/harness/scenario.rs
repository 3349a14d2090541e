use crate::config::ScenarioConfig;
use crate::error::ConfigError;
use crate::safety::{safe_distance, stop_index};
use crate::world::{build_intersection, find_conflict_point, ConflictPoint, IntersectionMap};
use crate::Path;

/// Distance a braking stop may run past the tolerance window, m.
const STOP_OVERSHOOT: f64 = 1.0;

/// A validated configuration with its map, routes and conflict point.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub map: IntersectionMap<f64>,
    pub ego_path: Path,
    pub north_path: Path,
    pub conflict: ConflictPoint<f64>,
    pub stop_index: usize,
}

impl Scenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let map = build_intersection(&cfg.map)?;
        let r = &cfg.routes;
        let ego_path = map.plan_route(r.ego_entry, r.ego_exit)?;
        let north_path = map.plan_route(r.north_entry, r.north_exit)?;
        let conflict = find_conflict_point(&ego_path, &north_path)
            .map_err(|_| ConfigError::Infeasible("the routes share no conflict waypoint".into()))?;
        if conflict.ego_index < cfg.shield.stop_margin_waypoints {
            return Err(ConfigError::Infeasible(format!(
                "stop margin of {} waypoints reaches before the ego route start (conflict at index {})",
                cfg.shield.stop_margin_waypoints, conflict.ego_index
            )));
        }
        let stop = stop_index(&conflict, cfg.shield.stop_margin_waypoints);
        let s = Self {
            stop_index: stop,
            cfg,
            map,
            ego_path,
            north_path,
            conflict,
        };
        s.check_feasible()?;
        Ok(s)
    }

    fn check_feasible(&self) -> Result<(), ConfigError> {
        let cfg = &self.cfg;
        let cum = self.ego_path.cum_length();
        let stop_s = cum[self.stop_index];
        if cfg.routes.ego_spawn_offset >= stop_s {
            return Err(ConfigError::Infeasible("ego spawns past its stop waypoint".into()));
        }
        if cfg.routes.north_spawn_offset >= cum_at(&self.north_path, self.conflict.north_index) {
            return Err(ConfigError::Infeasible("north spawns past the conflict waypoint".into()));
        }
        // the shield must be able to stop the ego from the worst speed it can carry
        let v_max = cfg.map.speed_limit + 5.0 / 3.6;
        let d_safe = safe_distance(v_max, 0.0, cfg.shield.a_lon_max)?;
        let room = stop_s - cfg.routes.ego_spawn_offset;
        if room <= d_safe {
            return Err(ConfigError::Infeasible(format!(
                "ego has {room:.2} m to its stop waypoint but needs {d_safe:.2} m to stop from {v_max:.2} m/s"
            )));
        }
        // a stop anywhere within the tolerance must keep clear of the north lane
        let clear = self.stop_clearance();
        if clear <= cfg.episode.vehicle_length {
            return Err(ConfigError::Infeasible(format!(
                "a braking stop leaves only {clear:.2} m to the north route (collision below {:.2} m); raise stop_margin_waypoints",
                cfg.episode.vehicle_length
            )));
        }
        let gate = self.map.half_size + cfg.shield.intersection_margin;
        let stop_p = self.ego_path.points()[self.stop_index];
        if stop_p.x.abs().max(stop_p.y.abs()) - d_safe > gate {
            return Err(ConfigError::Infeasible(
                "intersection margin is too small for the shield to engage in time".into(),
            ));
        }
        Ok(())
    }

    /// Smallest distance to the north route from the ego route between the
    /// stop waypoint and the end of the stop tolerance, plus an allowance for
    /// brake actuator overshoot.
    pub fn stop_clearance(&self) -> f64 {
        let cum = self.ego_path.cum_length();
        let s0 = cum[self.stop_index];
        let s1 = s0 + self.cfg.shield.stop_tolerance + STOP_OVERSHOOT;
        let n = 50;
        (0..=n)
            .map(|k| {
                let s = s0 + (s1 - s0) * k as f64 / n as f64;
                polyline_distance(&self.north_path, self.ego_path.point_at(s))
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn conflict_s_ego(&self) -> f64 {
        self.ego_path.cum_length()[self.conflict.ego_index]
    }

    pub fn conflict_s_north(&self) -> f64 {
        self.north_path.cum_length()[self.conflict.north_index]
    }
}

fn cum_at(p: &Path, i: usize) -> f64 {
    p.cum_length()[i]
}

fn polyline_distance(path: &Path, q: crate::Vec2<f64>) -> f64 {
    path.points()
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let t = ((q - w[0]).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
            (w[0] + d * t).distance(q)
        })
        .fold(f64::INFINITY, f64::min)
}
