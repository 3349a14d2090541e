//! Training without the shield penalty and the comparison against the full
//! reward.

use std::path::Path;

use serde::Serialize;

use super::env::ShieldMode;
use super::evaluate::{evaluate, run_cell, EvalReport, PolicySource};
use super::io::write_file;
use super::scenario::Scenario;
use super::train::train;
use crate::config::ScenarioConfig;
use crate::error::HarnessError;
use crate::nn::PolicyParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    /// Delays on which a driver that ignores the north car gets braked.
    pub yield_delays: Vec<f64>,
    pub full: EvalReport,
    pub ablated: EvalReport,
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// The configuration with the shield penalty removed from the reward sum.
/// The shield itself stays in the loop.
pub fn ablated_config(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.reward.adas_penalty = 0.0;
    c
}

/// Evaluation delays on which the speed-limit tracker, shield on, needs the
/// shield for at least one seed. Those are the delays that force a yield.
pub fn yield_forcing_delays(sc: &Scenario) -> Vec<f64> {
    let e = &sc.cfg.eval;
    e.delays
        .iter()
        .copied()
        .filter(|&d| {
            e.seeds
                .iter()
                .any(|&s| run_cell(sc, PolicySource::SpeedLimit, ShieldMode::On, s, d).summary.adas_activations > 0)
        })
        .collect()
}

/// Compares two trained policies on the yield-forcing delays.
pub fn compare(sc: &Scenario, full: &PolicyParams<f32>, ablated: &PolicyParams<f32>) -> AblationReport {
    let delays = yield_forcing_delays(sc);
    let seeds = &sc.cfg.eval.seeds;
    let run = |p| {
        evaluate(
            sc,
            PolicySource::Learned {
                policy: p,
                stochastic: false,
            },
            ShieldMode::On,
            &delays,
            seeds,
        )
    };
    AblationReport {
        full: run(full),
        ablated: run(ablated),
        yield_delays: delays,
    }
}

/// Trains the full-reward and the ablated policy with the same seed into
/// `out/full` and `out/ablated`, then writes `out/ablation.json`.
pub fn ablate(cfg: &ScenarioConfig, out: &Path) -> Result<AblationReport, HarnessError> {
    let sc = Scenario::new(cfg.clone())?;
    let full = train(cfg, Some(&out.join("full")))?;
    let ablated = train(&ablated_config(cfg), Some(&out.join("ablated")))?;
    let report = compare(&sc, &full.checkpoint.policy, &ablated.checkpoint.policy);
    write_file(&out.join("ablation.json"), report.to_json().as_bytes())?;
    Ok(report)
}
