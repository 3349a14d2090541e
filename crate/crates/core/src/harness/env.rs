//! One episode of the two-vehicle scene, advanced tick by tick.

use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::trace::TraceRow;
use crate::control::{lka_steering, preview_error, safety_brake, throttle_tracking, PidState};
use crate::rl::{observe, Observation, RewardBreakdown};
use crate::safety::{at_intersection, shield_step, Candidates, Chosen, ShieldDecision};
use crate::vehicle::{step_vehicle, Action, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Timeout,
    Collision,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        }
    }
}

/// Order in which the vehicles pass the conflict waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Cut,
    Yield,
    /// The ego never reached the conflict waypoint.
    None,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Cut => "cut",
            Regime::Yield => "yield",
            Regime::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShieldMode {
    On,
    Off,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub row: TraceRow,
    pub reward: RewardBreakdown,
    pub done: bool,
}

/// Mutable state of one episode.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    sc: &'a Scenario,
    pub mode: ShieldMode,
    pub north_delay: f64,
    pub north_speed: f64,
    pub ego: VehicleState<f64>,
    pub north: VehicleState<f64>,
    pub north_present: bool,
    pub tick: u64,
    pid_brake: PidState<f64>,
    pid_clear: PidState<f64>,
    pid_lka: PidState<f64>,
    /// Whether the shield braked on the previous tick.
    braking: bool,
    north_pid_th: PidState<f64>,
    north_pid_lka: PidState<f64>,
    pub ego_cross_time: Option<f64>,
    pub north_cross_time: Option<f64>,
    pub outcome: Option<Outcome>,
}

impl<'a> Episode<'a> {
    pub fn new(sc: &'a Scenario, mode: ShieldMode, north_delay: f64, north_speed: f64) -> Self {
        let r = &sc.cfg.routes;
        let ego = VehicleState::on_path(&sc.ego_path, r.ego_spawn_offset, sc.cfg.episode.ego_initial_speed);
        let north = VehicleState::on_path(&sc.north_path, r.north_spawn_offset, 0.0);
        let mut ep = Self {
            sc,
            mode,
            north_delay,
            north_speed,
            ego,
            north,
            north_present: false,
            tick: 0,
            pid_brake: PidState::default(),
            pid_clear: PidState::default(),
            pid_lka: PidState::default(),
            braking: false,
            north_pid_th: PidState::default(),
            north_pid_lka: PidState::default(),
            ego_cross_time: None,
            north_cross_time: None,
            outcome: None,
        };
        ep.maybe_spawn_north();
        ep
    }

    pub fn scenario(&self) -> &Scenario {
        self.sc
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.sc.cfg.dynamics.dt
    }

    pub fn observation(&self) -> Observation {
        observe(&self.ego, &self.north)
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    fn maybe_spawn_north(&mut self) {
        // spawn on the first tick whose start time reaches the delay
        if !self.north_present && self.time() + 1e-9 >= self.north_delay {
            self.north_present = true;
            self.north.v = self.north_speed;
        }
    }

    pub fn regime(&self) -> Regime {
        match (self.ego_cross_time, self.north_cross_time) {
            (None, _) => Regime::None,
            (Some(_), None) => Regime::Cut,
            (Some(e), Some(n)) => {
                if e < n {
                    Regime::Cut
                } else {
                    Regime::Yield
                }
            }
        }
    }

    pub fn distance(&self) -> f64 {
        if self.north_present {
            self.ego.position().distance(self.north.position())
        } else {
            f64::INFINITY
        }
    }

    fn shield(&self, actions: Candidates<f64>) -> (ShieldDecision<f64>, Action<f64>) {
        let cfg = &self.sc.cfg;
        let margin = cfg.shield.intersection_margin;
        let gate = self.north_present
            && at_intersection(&self.ego, &self.sc.map, margin)
            && at_intersection(&self.north, &self.sc.map, margin);
        let (mut d, a) = shield_step(
            &cfg.shield,
            &self.ego,
            &self.north,
            &self.sc.ego_path,
            &self.sc.north_path,
            &self.sc.conflict,
            actions,
            gate,
            self.braking,
        );
        match self.mode {
            ShieldMode::On => (d, a),
            ShieldMode::Off => {
                d.chosen = Chosen::Learned;
                d.adas_active = false;
                (d, actions.learned)
            }
        }
    }

    /// Advances one tick with the learned throttle `throttle`.
    pub fn step(&mut self, throttle: f64) -> StepOutcome {
        assert!(!self.is_done(), "episode already finished");
        let cfg = &self.sc.cfg;
        let ctl = &cfg.control;

        let (brake, pid_brake) = safety_brake(&ctl.braking, &self.pid_brake, self.ego.a_lon, cfg.shield.a_lon_max);
        self.pid_brake = pid_brake;
        let lka_err = preview_error(&self.ego, &self.sc.ego_path, ctl.lka_lookahead);
        let (steer, pid_lka) = lka_steering(&ctl.lane_keeping, &self.pid_lka, lka_err);
        self.pid_lka = pid_lka;
        let (clear, pid_clear) = throttle_tracking(&ctl.throttle, &self.pid_clear, self.ego.v, cfg.map.speed_limit);
        let a_learn = Action::new(throttle, 0.0, steer).clamped();
        let (decision, action) = self.shield(Candidates {
            brake: Action::new(0.0, brake, steer),
            clear: Action::new(clear, 0.0, steer),
            learned: a_learn,
        });
        self.braking = decision.chosen == Chosen::Safe;
        // the fallback throttle integrates only while it drives
        if decision.chosen == Chosen::Clear {
            self.pid_clear = pid_clear;
        }

        let prev_ego_s = self.ego.progress;
        self.ego = step_vehicle(&self.ego, action, &cfg.dynamics, &self.sc.ego_path);

        let prev_north_s = self.north.progress;
        if self.north_present {
            let (th, s) = throttle_tracking(&ctl.throttle, &self.north_pid_th, self.north.v, self.north_speed);
            self.north_pid_th = s;
            let err = preview_error(&self.north, &self.sc.north_path, ctl.lka_lookahead);
            let (st, s) = lka_steering(&ctl.lane_keeping, &self.north_pid_lka, err);
            self.north_pid_lka = s;
            self.north = step_vehicle(&self.north, Action::new(th, 0.0, st), &cfg.dynamics, &self.sc.north_path);
        }

        self.tick += 1;
        let t = self.time();
        let ce = self.sc.conflict_s_ego();
        if self.ego_cross_time.is_none() && prev_ego_s < ce && self.ego.progress >= ce {
            self.ego_cross_time = Some(t);
        }
        let cn = self.sc.conflict_s_north();
        if self.north_present && self.north_cross_time.is_none() && prev_north_s < cn && self.north.progress >= cn {
            self.north_cross_time = Some(t);
        }

        let cte = self.sc.ego_path.project(self.ego.position()).offset;
        let reward = cfg.reward.breakdown(decision.adas_active, cte, self.ego.v, self.ego.a_lon, self.ego.a_lat);
        let distance = self.distance();

        if self.north_present && distance < cfg.episode.vehicle_length {
            self.outcome = Some(Outcome::Collision);
        } else if self.ego.progress >= self.sc.ego_path.total_length() - 0.5 {
            self.outcome = Some(Outcome::Completed);
        } else if t >= cfg.episode.timeout - 1e-9 {
            self.outcome = Some(Outcome::Timeout);
        }

        let row = TraceRow {
            t,
            ego: self.ego,
            north: self.north,
            north_present: self.north_present,
            action,
            throttle_learned: a_learn.throttle,
            adas_active: decision.adas_active,
            reward,
            ttr_ego: decision.ttr_ego,
            ttr_north: decision.ttr_north,
            d_safe: decision.d_safe,
            d_c: decision.d_c_ego,
            cte,
            distance,
        };
        self.maybe_spawn_north();
        StepOutcome {
            row,
            reward,
            done: self.is_done(),
        }
    }
}
