//! Whole episodes: the shield against hostile drivers, trace bookkeeping,
//! determinism and the exported panels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safecross::config::ScenarioConfig;
use safecross::harness::evaluate::run_cell;
use safecross::harness::export::{export_trace, TRACE_PANELS};
use safecross::harness::run::{episode_rng, RandomThrottle};
use safecross::harness::trace::row_stats;
use safecross::harness::{evaluate, run_episode, Outcome, PolicySource, Regime, Scenario, ShieldMode};

fn scenario() -> Scenario {
    Scenario::new(ScenarioConfig::default()).unwrap()
}

#[test]
fn shield_stops_erratic_drivers() {
    let sc = scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..300 {
        let delay = rng.random_range(0.0..10.0);
        let mut ctl = RandomThrottle::new(episode_rng(i, delay));
        let tr = run_episode(&sc, &mut ctl, ShieldMode::On, delay, sc.cfg.north.target_speed);
        assert_ne!(tr.summary.outcome, Outcome::Collision, "episode {i}, delay {delay}");
        assert!(tr.summary.min_distance >= sc.cfg.episode.vehicle_length);
    }
}

#[test]
fn shield_holds_against_jittered_north_speed() {
    let mut cfg = ScenarioConfig::default();
    cfg.north.speed_jitter = 1.5;
    let sc = Scenario::new(cfg).unwrap();
    let delays: Vec<f64> = (0..=16).map(|i| i as f64 * 0.5).collect();
    for src in [PolicySource::FullThrottle, PolicySource::SpeedLimit] {
        let r = evaluate(&sc, src, ShieldMode::On, &delays, &[0, 1, 2]);
        assert_eq!(r.collisions, 0, "{}", src.name());
    }
}

#[test]
fn speed_limit_driver_without_shield_collides() {
    let sc = scenario();
    let off = evaluate(&sc, PolicySource::SpeedLimit, ShieldMode::Off, &sc.cfg.eval.delays, &[0]);
    assert!(off.collisions > 0);
    assert_eq!(off.adas_episodes, 0);
    // full throttle beats the north car through the junction on its own
    let rush = evaluate(&sc, PolicySource::FullThrottle, ShieldMode::Off, &sc.cfg.eval.delays, &[0]);
    assert_eq!(rush.collisions, 0);
}

#[test]
fn summary_agrees_with_rows() {
    let sc = scenario();
    for (src, delay) in [(PolicySource::FullThrottle, 0.0), (PolicySource::SpeedLimit, 2.0), (PolicySource::SpeedLimit, 8.0)] {
        let tr = run_cell(&sc, src, ShieldMode::On, 0, delay);
        let s = row_stats(&tr.rows);
        assert_eq!(s.ticks, tr.summary.ticks);
        assert_eq!(s.adas_activations, tr.summary.adas_activations);
        assert_eq!(s.min_distance, tr.summary.min_distance);
        assert!((s.total_reward - tr.summary.total_reward).abs() < 1e-9);
        for (k, r) in tr.rows.iter().enumerate() {
            assert!((r.t - (k + 1) as f64 * sc.cfg.control.throttle.dt).abs() < 1e-9);
            if !r.adas_active {
                assert_eq!(r.action.throttle, r.throttle_learned);
                assert_eq!(r.action.brake, 0.0);
            }
            let total = r.reward.r_adas + r.reward.r_lka + r.reward.r_v + r.reward.r_a_lon + r.reward.r_a_lat;
            assert!((total - r.reward.total).abs() < 1e-9);
        }
    }
}

#[test]
fn speed_limit_driver_regimes() {
    let sc = scenario();
    // the north car is long gone or far away: no reason to brake
    let late = run_cell(&sc, PolicySource::SpeedLimit, ShieldMode::On, 0, 8.0);
    assert_eq!(late.summary.adas_activations, 0);
    assert_eq!(late.summary.regime, Regime::Cut);
    assert_eq!(late.summary.outcome, Outcome::Completed);
    // arriving together forces a braked yield
    let early = run_cell(&sc, PolicySource::SpeedLimit, ShieldMode::On, 0, 0.0);
    assert!(early.summary.adas_activations > 0);
    assert_eq!(early.summary.regime, Regime::Yield);
}

#[test]
fn episodes_replay_identically() {
    let sc = scenario();
    for delay in [0.0, 1.5, 4.0] {
        let a = run_cell(&sc, PolicySource::SpeedLimit, ShieldMode::On, 7, delay);
        let b = run_cell(&sc, PolicySource::SpeedLimit, ShieldMode::On, 7, delay);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.summary, b.summary);
    }
    let delays = [0.0, 3.0];
    let r1 = evaluate(&sc, PolicySource::FullThrottle, ShieldMode::On, &delays, &[1, 2]);
    let r2 = evaluate(&sc, PolicySource::FullThrottle, ShieldMode::On, &delays, &[1, 2]);
    assert_eq!(r1.to_json(), r2.to_json());
}

#[test]
fn exported_panels_copy_trace_values_verbatim() {
    let sc = scenario();
    let tr = run_cell(&sc, PolicySource::SpeedLimit, ShieldMode::On, 0, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("trace.csv");
    let csv = tr.to_csv();
    std::fs::write(&csv_path, &csv).unwrap();
    let written = export_trace(&csv_path, dir.path()).unwrap();
    assert_eq!(written.len(), TRACE_PANELS.len());

    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    for ((_, cols), path) in TRACE_PANELS.iter().zip(&written) {
        let panel = std::fs::read_to_string(path).unwrap();
        let mut lines = panel.lines();
        assert_eq!(lines.next().unwrap(), cols.join(","));
        let mut n = 0;
        for (line, row) in lines.zip(&rows) {
            for (field, col) in line.split(',').zip(cols.iter()) {
                let i = header.iter().position(|h| h == col).unwrap();
                assert_eq!(field, row[i]);
                // and the token still parses to the same number
                assert_eq!(field.parse::<f64>().unwrap().to_bits(), row[i].parse::<f64>().unwrap().to_bits());
            }
            n += 1;
        }
        assert_eq!(n, rows.len());
    }
}
