//! Scenario configuration: one TOML document with a section per subsystem.

use serde::{Deserialize, Serialize};

use crate::control::PidConfig;
use crate::error::ConfigError;
use crate::nn::NetSpec;
use crate::rl::{PpoConfig, RewardConfig};
use crate::safety::ShieldConfig;
use crate::vehicle::DynamicsParams;
use crate::world::{Leg, MapConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub braking: PidConfig<f64>,
    pub throttle: PidConfig<f64>,
    pub lane_keeping: PidConfig<f64>,
    /// Preview distance of the lane-keeping error, m.
    pub lka_lookahead: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            braking: PidConfig::braking(),
            throttle: PidConfig::throttle(),
            lane_keeping: PidConfig::lane_keeping(),
            lka_lookahead: 6.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutesConfig {
    pub ego_entry: Leg,
    pub ego_exit: Leg,
    pub north_entry: Leg,
    pub north_exit: Leg,
    /// Start of each vehicle along its route, m from the route start.
    pub ego_spawn_offset: f64,
    pub north_spawn_offset: f64,
}

impl Default for RoutesConfig {
    fn default() -> Self {
        Self {
            ego_entry: Leg::South,
            ego_exit: Leg::West,
            north_entry: Leg::North,
            north_exit: Leg::South,
            ego_spawn_offset: 0.0,
            north_spawn_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NorthConfig {
    /// Cruise speed of the north vehicle, m/s. It spawns at this speed.
    pub target_speed: f64,
    /// Spawn delay is drawn uniformly from this range per training episode, s.
    pub spawn_delay_min: f64,
    pub spawn_delay_max: f64,
    /// Half-width of a uniform per-episode perturbation of `target_speed`.
    pub speed_jitter: f64,
}

impl Default for NorthConfig {
    fn default() -> Self {
        Self {
            target_speed: 8.0,
            spawn_delay_min: 0.0,
            spawn_delay_max: 8.0,
            speed_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub timeout: f64,
    /// Centre distance below which the vehicles collide, m.
    pub vehicle_length: f64,
    /// Ego speed at spawn, m/s.
    #[serde(default)]
    pub ego_initial_speed: f64,
    /// Ticks the learned throttle is held between policy queries.
    #[serde(default = "one")]
    pub action_repeat: usize,
}

fn one() -> usize {
    1
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            timeout: 30.0,
            vehicle_length: 4.5,
            ego_initial_speed: 25.0 / 3.6,
            action_repeat: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub seed: u64,
    /// Write an intermediate checkpoint every this many updates; 0 disables.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 200_000,
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// North spawn delays of the evaluation sweep, s.
    pub delays: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            delays: (0..=16).map(|i| i as f64 * 0.5).collect(),
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub map: MapConfig<f64>,
    pub routes: RoutesConfig,
    pub dynamics: DynamicsParams<f64>,
    pub control: ControlConfig,
    pub shield: ShieldConfig<f64>,
    pub reward: RewardConfig,
    pub north: NorthConfig,
    pub episode: EpisodeConfig,
    pub network: NetSpec,
    pub ppo: PpoConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level checks. Geometric feasibility is checked when building a
    /// scenario.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = ConfigError::Invalid;
        self.dynamics.validate().map_err(inv)?;
        for (p, name) in [
            (&self.control.braking, "braking"),
            (&self.control.throttle, "throttle"),
            (&self.control.lane_keeping, "lane_keeping"),
        ] {
            p.validate().map_err(|e| inv(format!("control.{name}: {e}")))?;
        }
        if !(self.control.lka_lookahead > 0.0) {
            return Err(inv("control.lka_lookahead must be positive".into()));
        }
        self.shield.validate().map_err(inv)?;
        self.reward.validate().map_err(inv)?;
        self.ppo.validate().map_err(inv)?;
        let n = &self.north;
        if !(n.target_speed > 0.0) || !(n.speed_jitter >= 0.0) || n.speed_jitter >= n.target_speed {
            return Err(inv("north: need target_speed > speed_jitter >= 0".into()));
        }
        if !(n.spawn_delay_min >= 0.0 && n.spawn_delay_max >= n.spawn_delay_min) {
            return Err(inv("north: need 0 <= spawn_delay_min <= spawn_delay_max".into()));
        }
        if !(self.episode.timeout > 0.0) || !(self.episode.vehicle_length > 0.0) {
            return Err(inv("episode: timeout and vehicle_length must be positive".into()));
        }
        if self.episode.action_repeat == 0 {
            return Err(inv("episode.action_repeat must be at least 1".into()));
        }
        let v_max = self.map.speed_limit + 5.0 / 3.6;
        if !(0.0..=v_max).contains(&self.episode.ego_initial_speed) {
            return Err(inv(format!("episode.ego_initial_speed must lie in [0, {v_max:.3}] m/s")));
        }
        if self.network.input != crate::rl::OBS_DIM {
            return Err(inv(format!("network.input must be {}", crate::rl::OBS_DIM)));
        }
        if self.eval.delays.iter().any(|d| !(*d >= 0.0)) {
            return Err(inv("eval.delays must be non-negative".into()));
        }
        let r = &self.routes;
        if r.ego_entry == r.ego_exit || r.north_entry == r.north_exit {
            return Err(inv("routes: entry and exit must differ".into()));
        }
        if !(r.ego_spawn_offset >= 0.0 && r.north_spawn_offset >= 0.0) {
            return Err(inv("routes: spawn offsets must be non-negative".into()));
        }
        // the dt of every loop has to match the plant tick
        for p in [&self.control.braking, &self.control.throttle, &self.control.lane_keeping] {
            if p.dt != self.dynamics.dt {
                return Err(inv("control dt must equal dynamics.dt".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = ScenarioConfig::default();
        let text = c.to_toml();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn partial_document_fills_defaults() {
        let c = ScenarioConfig::from_toml("[north]\ntarget_speed = 7.0\nspawn_delay_min = 1.0\nspawn_delay_max = 2.0\nspeed_jitter = 0.0\n").unwrap();
        assert_eq!(c.north.target_speed, 7.0);
        assert_eq!(c.map, MapConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ScenarioConfig::from_toml("[map]\nlane_widht = 3.0\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = ScenarioConfig::default();
        c.shield.a_lon_max = 1.0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.north.spawn_delay_max = -1.0;
        assert!(c.validate().is_err());
    }
}
