//! Throttle sources and the single-episode runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::env::{Episode, ShieldMode};
use super::scenario::Scenario;
use super::trace::{row_stats, EpisodeSummary, EpisodeTrace};
use crate::control::{throttle_tracking, PidState};
use crate::nn::{ForwardCache, PolicyParams};
use crate::rl::dist::squash;
use crate::rl::Observation;

/// Anything that picks the learned throttle each tick.
pub trait Controller {
    fn throttle(&mut self, obs: &Observation, ep: &Episode) -> f64;
}

/// Always floors the pedal; the worst case for the shield.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullThrottle;

impl Controller for FullThrottle {
    fn throttle(&mut self, _: &Observation, _: &Episode) -> f64 {
        1.0
    }
}

/// Tracks the speed limit with the throttle PID, ignoring the other car.
#[derive(Debug, Clone, Default)]
pub struct SpeedLimitPid {
    state: PidState<f64>,
}

impl Controller for SpeedLimitPid {
    fn throttle(&mut self, _: &Observation, ep: &Episode) -> f64 {
        let cfg = &ep.scenario().cfg;
        let (u, s) = throttle_tracking(&cfg.control.throttle, &self.state, ep.ego.v, cfg.map.speed_limit);
        self.state = s;
        u
    }
}

/// Piecewise-constant random throttle, held for 0.2 to 3 s at a time. An
/// erratic driver for stress-testing the shield.
#[derive(Debug, Clone)]
pub struct RandomThrottle {
    rng: ChaCha8Rng,
    value: f64,
    hold: u32,
}

impl RandomThrottle {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, value: 0.0, hold: 0 }
    }
}

impl Controller for RandomThrottle {
    fn throttle(&mut self, _: &Observation, _: &Episode) -> f64 {
        if self.hold == 0 {
            self.value = self.rng.random::<f64>();
            self.hold = self.rng.random_range(10..=150);
        }
        self.hold -= 1;
        self.value
    }
}

/// Network policy with frozen normalization. Samples from the action
/// distribution when given an RNG, otherwise uses the mean.
pub struct LearnedPolicy<'p> {
    policy: &'p PolicyParams<f32>,
    rng: Option<ChaCha8Rng>,
    cache: ForwardCache<f32>,
    input: Vec<f32>,
    held: f64,
}

impl<'p> LearnedPolicy<'p> {
    pub fn deterministic(policy: &'p PolicyParams<f32>) -> Self {
        Self {
            policy,
            rng: None,
            cache: ForwardCache::default(),
            input: Vec::new(),
            held: 0.0,
        }
    }

    pub fn stochastic(policy: &'p PolicyParams<f32>, rng: ChaCha8Rng) -> Self {
        Self {
            rng: Some(rng),
            ..Self::deterministic(policy)
        }
    }
}

impl Controller for LearnedPolicy<'_> {
    fn throttle(&mut self, obs: &Observation, ep: &Episode) -> f64 {
        if ep.tick % ep.scenario().cfg.episode.action_repeat as u64 != 0 {
            return self.held;
        }
        let x = self.policy.obs_norm.apply(&obs.0);
        self.input.clear();
        self.input.extend(x.iter().map(|v| *v as f32));
        let (mean, _) = self.policy.net.forward(&self.policy.params, &self.input, &mut self.cache);
        let mean = mean as f64;
        let u = match &mut self.rng {
            Some(rng) => {
                let z: f64 = rng.sample(StandardNormal);
                mean + (self.policy.log_std() as f64).exp() * z
            }
            None => mean,
        };
        self.held = squash(u);
        self.held
    }
}

/// Per-episode RNG derived from a seed and the spawn delay.
pub fn episode_rng(seed: u64, delay: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ delay.to_bits())
}

/// North cruise speed for an episode: the target plus the configured jitter.
pub fn draw_north_speed<R: Rng>(sc: &Scenario, rng: &mut R) -> f64 {
    let n = &sc.cfg.north;
    if n.speed_jitter > 0.0 {
        n.target_speed + rng.random_range(-n.speed_jitter..=n.speed_jitter)
    } else {
        n.target_speed
    }
}

/// Simulates one episode to its end and returns the full trace.
pub fn run_episode(
    sc: &Scenario,
    controller: &mut dyn Controller,
    mode: ShieldMode,
    north_delay: f64,
    north_speed: f64,
) -> EpisodeTrace {
    let mut ep = Episode::new(sc, mode, north_delay, north_speed);
    let mut rows = Vec::new();
    while !ep.is_done() {
        let obs = ep.observation();
        let u = controller.throttle(&obs, &ep);
        rows.push(ep.step(u).row);
    }
    summarize(&ep, rows)
}

pub fn summarize(ep: &Episode, rows: Vec<super::trace::TraceRow>) -> EpisodeTrace {
    let stats = row_stats(&rows);
    let sc = ep.scenario();
    // slowest speed on the approach to and through the conflict waypoint
    let s_lo = sc.ego_path.cum_length()[sc.stop_index] - 10.0;
    let s_hi = sc.conflict_s_ego();
    let min_speed_in_junction = rows
        .iter()
        .filter(|r| r.ego.progress >= s_lo && r.ego.progress <= s_hi)
        .map(|r| r.ego.v)
        .fold(f64::INFINITY, f64::min);
    let summary = EpisodeSummary {
        outcome: ep.outcome.expect("episode finished"),
        regime: ep.regime(),
        ticks: stats.ticks,
        north_delay: ep.north_delay,
        north_speed: ep.north_speed,
        min_distance: stats.min_distance,
        adas_activations: stats.adas_activations,
        mean_speed: stats.mean_speed,
        min_speed_in_junction,
        total_reward: stats.total_reward,
        ego_cross_time: ep.ego_cross_time,
        north_cross_time: ep.north_cross_time,
    };
    EpisodeTrace { rows, summary }
}
