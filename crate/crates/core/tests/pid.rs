//! The three controllers against a fine-step reference, open and closed
//! loop, and output bounds under arbitrary inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safecross::control::{lka_steering, pid_step, PidConfig, PidState};

const FINE_DT: f64 = 1e-4;
const HORIZON: f64 = 6.0;

/// First-order plant y' = (gain * u - y) / tau, stepped exactly under a
/// zero-order hold so only the controller's sample time differs between runs.
#[derive(Clone, Copy)]
struct Plant {
    gain: f64,
    tau: f64,
}

impl Plant {
    fn step(&self, y: f64, u: f64, dt: f64) -> f64 {
        let target = self.gain * u;
        target + (y - target) * (-dt / self.tau).exp()
    }
}

struct Loop {
    name: &'static str,
    cfg: PidConfig<f64>,
    plant: Plant,
    y0: f64,
    /// Maps the plant output to the controller error.
    error: fn(f64) -> f64,
    /// Maps the PID output to the plant input.
    command: fn(&PidConfig<f64>, &PidState<f64>, f64) -> (f64, PidState<f64>),
}

fn plain(cfg: &PidConfig<f64>, s: &PidState<f64>, e: f64) -> (f64, PidState<f64>) {
    pid_step(cfg, s, e)
}

fn loops() -> Vec<Loop> {
    vec![
        // speed from rest to 10 m/s; the throttle saturates at first
        Loop {
            name: "throttle",
            cfg: PidConfig::throttle(),
            plant: Plant { gain: 20.0, tau: 2.0 },
            y0: 0.0,
            error: |v| 10.0 - v,
            command: plain,
        },
        // deceleration (negative) chasing -5 m/s^2 through an actuator lag
        Loop {
            name: "braking",
            cfg: PidConfig::braking(),
            plant: Plant { gain: -8.0, tau: 0.5 },
            y0: 0.0,
            error: |a| a + 5.0,
            command: plain,
        },
        // lateral offset of 0.5 m pulled back to the lane centre
        Loop {
            name: "lane keeping",
            cfg: PidConfig::lane_keeping(),
            plant: Plant { gain: 2.0, tau: 0.5 },
            y0: 0.5,
            error: |y| y,
            command: lka_steering,
        },
    ]
}

/// Controller output and plant output at every coarse sample instant.
fn closed_loop(l: &Loop, dt: f64, every: usize) -> (Vec<f64>, Vec<f64>) {
    let cfg = PidConfig { dt, ..l.cfg };
    let mut state = PidState::default();
    let mut y = l.y0;
    let steps = (HORIZON / dt).round() as usize;
    let (mut us, mut ys) = (Vec::new(), Vec::new());
    for k in 0..steps {
        let (u, next) = (l.command)(&cfg, &state, (l.error)(y));
        state = next;
        if k % every == 0 {
            us.push(u);
            ys.push(y);
        }
        y = l.plant.step(y, u, dt);
    }
    (us, ys)
}

/// Output for an error that jumps from 0 to `e` at t = 0.
fn open_loop_step(l: &Loop, e: f64, dt: f64, every: usize) -> Vec<f64> {
    let cfg = PidConfig { dt, ..l.cfg };
    let mut state = PidState {
        initialized: true,
        ..PidState::default()
    };
    let steps = (HORIZON / dt).round() as usize;
    let mut out = Vec::new();
    for k in 0..steps {
        let (u, next) = (l.command)(&cfg, &state, e);
        state = next;
        if k % every == 0 {
            out.push(u);
        }
    }
    out
}

fn worst_gap(a: &[f64], b: &[f64], range: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / range).fold(0.0, f64::max)
}

fn every(l: &Loop) -> usize {
    (l.cfg.dt / FINE_DT).round() as usize
}

#[test]
fn step_inputs_match_fine_reference() {
    for l in loops() {
        let range = l.cfg.out_max - l.cfg.out_min;
        for e in [-20.0, -1.0, -0.1, 0.05, 0.5, 3.0, 20.0] {
            let coarse = open_loop_step(&l, e, l.cfg.dt, 1);
            let fine = open_loop_step(&l, e, FINE_DT, every(&l));
            // an unfiltered derivative turns the jump into a one-sample kick
            // whose height scales with 1/dt; the continuous limit is an impulse
            let skip = usize::from(l.cfg.derivative_filter == 0.0);
            let gap = worst_gap(&coarse[skip..], &fine[skip..], range);
            assert!(gap < 0.02, "{} step {e}: worst deviation {gap:.4} of range", l.name);
        }
    }
}

#[test]
fn closed_loop_tracking_matches_fine_reference() {
    for l in loops() {
        let (_, coarse) = closed_loop(&l, l.cfg.dt, 1);
        let (_, fine) = closed_loop(&l, FINE_DT, every(&l));
        let lo = fine.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fine.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = worst_gap(&coarse, &fine, hi - lo);
        assert!(gap < 0.02, "{}: worst deviation {gap:.4} of the plant swing", l.name);
    }
}

#[test]
fn outputs_stay_in_bounds_for_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for l in loops() {
        let lo = l.cfg.out_min.min(-1.0);
        let hi = l.cfg.out_max.max(1.0);
        let mut state = PidState::default();
        for i in 0..100_000 {
            // occasionally jump to an arbitrary state
            if i % 1000 == 0 {
                state = PidState {
                    integral: rng.random_range(-1e3..1e3),
                    prev_error: rng.random_range(-1e3..1e3),
                    derivative: rng.random_range(-1e3..1e3),
                    initialized: rng.random_bool(0.5),
                };
            }
            let e = if rng.random_bool(0.5) {
                rng.random_range(-1.0..1.0)
            } else {
                rng.random_range(-1e4..1e4)
            };
            let (u, next) = (l.command)(&l.cfg, &state, e);
            assert!(u.is_finite());
            assert!(u >= lo && u <= hi, "{}: {u}", l.name);
            if l.name != "lane keeping" {
                assert!(u >= l.cfg.out_min && u <= l.cfg.out_max);
            }
            state = next;
        }
    }
}
