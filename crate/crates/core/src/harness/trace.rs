//! Per-tick episode records, summaries and their CSV form.

use std::fmt::Write as _;

use serde::Serialize;

use super::env::{Outcome, Regime};
use crate::rl::RewardBreakdown;
use crate::vehicle::{Action, VehicleState};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Time at the end of the tick, s.
    pub t: f64,
    pub ego: VehicleState<f64>,
    pub north: VehicleState<f64>,
    pub north_present: bool,
    /// Action delivered to the ego plant.
    pub action: Action<f64>,
    pub throttle_learned: f64,
    pub adas_active: bool,
    pub reward: RewardBreakdown,
    pub ttr_ego: f64,
    pub ttr_north: f64,
    pub d_safe: f64,
    pub d_c: f64,
    pub cte: f64,
    /// Centre distance, infinite before the north vehicle spawns.
    pub distance: f64,
}

pub const TRACE_COLUMNS: &[&str] = &[
    "t",
    "ego_x",
    "ego_y",
    "ego_heading",
    "ego_v",
    "ego_a_lon",
    "ego_a_lat",
    "north_present",
    "north_x",
    "north_y",
    "north_heading",
    "north_v",
    "throttle",
    "brake",
    "steer",
    "throttle_learned",
    "adas_active",
    "r_adas",
    "r_lka",
    "r_v",
    "r_a_lon",
    "r_a_lat",
    "r_total",
    "ttr_ego",
    "ttr_north",
    "d_safe",
    "d_c",
    "cte",
    "distance",
];

impl TraceRow {
    pub fn write_csv(&self, out: &mut String) {
        let r = &self.reward;
        let vals = [
            self.t,
            self.ego.x,
            self.ego.y,
            self.ego.heading,
            self.ego.v,
            self.ego.a_lon,
            self.ego.a_lat,
            self.north_present as u8 as f64,
            self.north.x,
            self.north.y,
            self.north.heading,
            self.north.v,
            self.action.throttle,
            self.action.brake,
            self.action.steer,
            self.throttle_learned,
            self.adas_active as u8 as f64,
            r.r_adas,
            r.r_lka,
            r.r_v,
            r.r_a_lon,
            r.r_a_lat,
            r.total,
            self.ttr_ego,
            self.ttr_north,
            self.d_safe,
            self.d_c,
            self.cte,
            self.distance,
        ];
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub outcome: Outcome,
    pub regime: Regime,
    pub ticks: usize,
    pub north_delay: f64,
    pub north_speed: f64,
    pub min_distance: f64,
    pub adas_activations: usize,
    pub mean_speed: f64,
    /// Slowest ego speed from 10 m before the stop waypoint to the conflict waypoint.
    pub min_speed_in_junction: f64,
    pub total_reward: f64,
    pub ego_cross_time: Option<f64>,
    pub north_cross_time: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub rows: Vec<TraceRow>,
    pub summary: EpisodeSummary,
}

/// Summary fields that follow from the rows alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStats {
    pub ticks: usize,
    pub min_distance: f64,
    pub adas_activations: usize,
    pub mean_speed: f64,
    pub total_reward: f64,
}

pub fn row_stats(rows: &[TraceRow]) -> RowStats {
    let n = rows.len();
    RowStats {
        ticks: n,
        min_distance: rows.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min),
        adas_activations: rows.iter().filter(|r| r.adas_active).count(),
        mean_speed: if n == 0 {
            0.0
        } else {
            rows.iter().map(|r| r.ego.v).sum::<f64>() / n as f64
        },
        total_reward: rows.iter().map(|r| r.reward.total).sum(),
    }
}

impl EpisodeTrace {
    pub fn to_csv(&self) -> String {
        let mut s = TRACE_COLUMNS.join(",");
        s.push('\n');
        for r in &self.rows {
            r.write_csv(&mut s);
        }
        s
    }
}

/// `|x|` percentile with linear interpolation, `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
