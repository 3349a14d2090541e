//! Delay × seed sweeps and their aggregate report.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::env::{Outcome, Regime, ShieldMode};
use super::io::write_file;
use super::run::{draw_north_speed, episode_rng, run_episode, Controller, FullThrottle, LearnedPolicy, SpeedLimitPid};
use super::scenario::Scenario;
use super::trace::{percentile, EpisodeSummary, EpisodeTrace};
use crate::error::HarnessError;
use crate::nn::PolicyParams;

/// Which throttle source drives the ego.
#[derive(Clone, Copy)]
pub enum PolicySource<'a> {
    /// Network mean, or a sample per tick when `stochastic`.
    Learned {
        policy: &'a PolicyParams<f32>,
        stochastic: bool,
    },
    FullThrottle,
    SpeedLimit,
}

impl PolicySource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySource::Learned { stochastic: false, .. } => "learned",
            PolicySource::Learned { stochastic: true, .. } => "learned-stochastic",
            PolicySource::FullThrottle => "full-throttle",
            PolicySource::SpeedLimit => "speed-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalEpisode {
    pub seed: u64,
    #[serde(flatten)]
    pub summary: EpisodeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub policy: String,
    pub shield: ShieldMode,
    pub episodes: usize,
    pub completed: usize,
    pub timeouts: usize,
    pub collisions: usize,
    pub cut: usize,
    #[serde(rename = "yield")]
    pub yield_: usize,
    pub no_crossing: usize,
    /// Episodes with at least one shield activation.
    pub adas_episodes: usize,
    /// `adas_episodes / episodes`.
    pub adas_activation_rate: f64,
    /// Fraction of all ticks with the shield active.
    pub adas_tick_fraction: f64,
    pub min_distance: f64,
    pub speed_p95: f64,
    pub a_lon_abs_p95: f64,
    pub a_lat_abs_p95: f64,
    pub a_lon_bound: f64,
    pub a_lat_bound: f64,
    pub cells: Vec<EvalEpisode>,
}

/// Runs one episode for the cell `(seed, delay)`.
pub fn run_cell(sc: &Scenario, source: PolicySource, mode: ShieldMode, seed: u64, delay: f64) -> EpisodeTrace {
    let mut rng = episode_rng(seed, delay);
    let speed = draw_north_speed(sc, &mut rng);
    let mut ctl: Box<dyn Controller + '_> = match source {
        PolicySource::Learned { policy, stochastic: false } => Box::new(LearnedPolicy::deterministic(policy)),
        PolicySource::Learned { policy, stochastic: true } => Box::new(LearnedPolicy::stochastic(policy, rng)),
        PolicySource::FullThrottle => Box::new(FullThrottle),
        PolicySource::SpeedLimit => Box::new(SpeedLimitPid::default()),
    };
    run_episode(sc, ctl.as_mut(), mode, delay, speed)
}

/// One episode per `(seed, delay)` pair, seeds outermost. Cells run in
/// parallel; the report does not depend on the thread count.
pub fn evaluate(sc: &Scenario, source: PolicySource, mode: ShieldMode, delays: &[f64], seeds: &[u64]) -> EvalReport {
    let cells: Vec<(u64, f64)> = seeds.iter().flat_map(|&s| delays.iter().map(move |&d| (s, d))).collect();
    let parts: Vec<(EvalEpisode, Vec<[f64; 3]>)> = cells
        .par_iter()
        .map(|&(seed, delay)| {
            let tr = run_cell(sc, source, mode, seed, delay);
            let samples = tr.rows.iter().map(|r| [r.ego.v, r.ego.a_lon.abs(), r.ego.a_lat.abs()]).collect();
            (
                EvalEpisode {
                    seed,
                    summary: tr.summary,
                },
                samples,
            )
        })
        .collect();
    aggregate(sc, source.name(), mode, parts)
}

fn aggregate(sc: &Scenario, name: &str, mode: ShieldMode, parts: Vec<(EvalEpisode, Vec<[f64; 3]>)>) -> EvalReport {
    let mut speed = Vec::new();
    let mut lon = Vec::new();
    let mut lat = Vec::new();
    let mut ticks = 0usize;
    let mut adas_ticks = 0usize;
    let mut cells = Vec::with_capacity(parts.len());
    for (e, samples) in parts {
        for s in samples {
            speed.push(s[0]);
            lon.push(s[1]);
            lat.push(s[2]);
        }
        ticks += e.summary.ticks;
        adas_ticks += e.summary.adas_activations;
        cells.push(e);
    }
    let count = |f: &dyn Fn(&EpisodeSummary) -> bool| cells.iter().filter(|c| f(&c.summary)).count();
    let n = cells.len();
    let adas_episodes = count(&|s| s.adas_activations > 0);
    let knot_zero = |pl: &crate::rl::PiecewiseLinear| pl.zero_crossing().unwrap_or(f64::NAN);
    EvalReport {
        policy: name.to_string(),
        shield: mode,
        episodes: n,
        completed: count(&|s| s.outcome == Outcome::Completed),
        timeouts: count(&|s| s.outcome == Outcome::Timeout),
        collisions: count(&|s| s.outcome == Outcome::Collision),
        cut: count(&|s| s.regime == Regime::Cut),
        yield_: count(&|s| s.regime == Regime::Yield),
        no_crossing: count(&|s| s.regime == Regime::None),
        adas_episodes,
        adas_activation_rate: if n == 0 { 0.0 } else { adas_episodes as f64 / n as f64 },
        adas_tick_fraction: if ticks == 0 { 0.0 } else { adas_ticks as f64 / ticks as f64 },
        min_distance: cells.iter().map(|c| c.summary.min_distance).fold(f64::INFINITY, f64::min),
        speed_p95: percentile(&speed, 0.95),
        a_lon_abs_p95: percentile(&lon, 0.95),
        a_lat_abs_p95: percentile(&lat, 0.95),
        a_lon_bound: knot_zero(&sc.cfg.reward.a_lon),
        a_lat_bound: knot_zero(&sc.cfg.reward.a_lat),
        cells,
    }
}

pub const EVAL_COLUMNS: &str = "seed,north_delay,north_speed,outcome,regime,ticks,min_distance,adas_activations,mean_speed,min_speed_in_junction,total_reward,ego_cross_time,north_cross_time";

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn episodes_csv(&self) -> String {
        let mut out = format!("{EVAL_COLUMNS}\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let s = &c.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.seed,
                s.north_delay,
                s.north_speed,
                s.outcome.as_str(),
                s.regime.as_str(),
                s.ticks,
                s.min_distance,
                s.adas_activations,
                s.mean_speed,
                s.min_speed_in_junction,
                s.total_reward,
                opt(s.ego_cross_time),
                opt(s.north_cross_time)
            );
        }
        out
    }

    /// Writes `report.json` and `episodes.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        write_file(&dir.join("report.json"), self.to_json().as_bytes())?;
        write_file(&dir.join("episodes.csv"), self.episodes_csv().as_bytes())
    }
}
