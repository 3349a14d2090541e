//! PPO training against the shielded scene.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::env::{Episode, Outcome, Regime, ShieldMode};
use super::io::write_file;
use super::run::draw_north_speed;
use super::scenario::Scenario;
use crate::config::ScenarioConfig;
use crate::error::{HarnessError, TrainError};
use crate::nn::{Checkpoint, ForwardCache, PolicyParams, RngState};
use crate::rl::dist::{gaussian_log_prob, squash};
use crate::rl::{ppo_update, RewardBreakdown, RolloutBuffer, UpdateStats};

/// One finished training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// Environment steps taken when the episode ended.
    pub env_steps: u64,
    pub north_delay: f64,
    pub north_speed: f64,
    pub outcome: Outcome,
    pub regime: Regime,
    pub ticks: u64,
    pub adas_activations: u64,
    pub min_distance: f64,
    /// Per-component sums of the unscaled reward.
    pub reward: RewardBreakdown,
}

/// One PPO update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub update: u64,
    pub env_steps: u64,
    pub episodes: u64,
    /// Mean total reward of episodes that ended during this rollout.
    pub mean_episode_reward: Option<f64>,
    pub stats: UpdateStats,
    pub log_std: f64,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint<f32>,
    pub updates: Vec<UpdateRecord>,
    pub episodes: Vec<EpisodeRecord>,
}

pub const METRICS_COLUMNS: &str =
    "update,env_steps,episodes,mean_episode_reward,policy_loss,value_loss,entropy,approx_kl,clip_fraction,grad_norm,log_std";
pub const EPISODE_COLUMNS: &str = "episode,env_steps,north_delay,north_speed,outcome,regime,ticks,adas_activations,min_distance,r_adas,r_lka,r_v,r_a_lon,r_a_lat,r_total";

pub fn metrics_csv(rows: &[UpdateRecord]) -> String {
    let mut s = format!("{METRICS_COLUMNS}\n");
    for r in rows {
        let m = r.mean_episode_reward.map(|v| v.to_string()).unwrap_or_default();
        let st = &r.stats;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.update,
            r.env_steps,
            r.episodes,
            m,
            st.policy_loss,
            st.value_loss,
            st.entropy,
            st.approx_kl,
            st.clip_fraction,
            st.grad_norm,
            r.log_std
        );
    }
    s
}

pub fn episodes_csv(rows: &[EpisodeRecord]) -> String {
    let mut s = format!("{EPISODE_COLUMNS}\n");
    for e in rows {
        let r = &e.reward;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.episode,
            e.env_steps,
            e.north_delay,
            e.north_speed,
            e.outcome.as_str(),
            e.regime.as_str(),
            e.ticks,
            e.adas_activations,
            e.min_distance,
            r.r_adas,
            r.r_lka,
            r.r_v,
            r.r_a_lon,
            r.r_a_lat,
            r.total
        );
    }
    s
}

struct Running<'a> {
    ep: Episode<'a>,
    reward: RewardBreakdown,
    adas: u64,
    min_distance: f64,
}

impl<'a> Running<'a> {
    fn start<R: Rng>(sc: &'a Scenario, rng: &mut R) -> Self {
        let n = &sc.cfg.north;
        let delay = if n.spawn_delay_max > n.spawn_delay_min {
            rng.random_range(n.spawn_delay_min..n.spawn_delay_max)
        } else {
            n.spawn_delay_min
        };
        let speed = draw_north_speed(sc, rng);
        Self {
            ep: Episode::new(sc, ShieldMode::On, delay, speed),
            reward: RewardBreakdown::default(),
            adas: 0,
            min_distance: f64::INFINITY,
        }
    }
}

fn add(a: &mut RewardBreakdown, b: &RewardBreakdown) {
    a.r_adas += b.r_adas;
    a.r_lka += b.r_lka;
    a.r_v += b.r_v;
    a.r_a_lon += b.r_a_lon;
    a.r_a_lat += b.r_a_lat;
    a.total += b.total;
}

fn save(dir: Option<&Path>, name: &str, ck: &Checkpoint<f32>) -> Result<(), HarnessError> {
    if let Some(d) = dir {
        write_file(&d.join(name), &ck.to_bytes())?;
    }
    Ok(())
}

/// Trains a policy for `cfg.train.total_steps` environment steps.
///
/// With an output directory this writes `config.toml`, `metrics.csv`,
/// `episodes.csv` and `checkpoint.json`, plus `checkpoints/update_NNNNNN.json`
/// every `checkpoint_every` updates. A non-finite loss aborts the run after
/// saving the last good parameters as `checkpoint.json`.
pub fn train(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<TrainOutcome, HarnessError> {
    let sc = Scenario::new(cfg.clone())?;
    let ppo = &cfg.ppo;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut policy: PolicyParams<f32> = PolicyParams::new(cfg.network.clone(), ppo.gamma, ppo.norm_clip, &mut rng)?;
    if let Some(d) = out {
        std::fs::create_dir_all(d).map_err(|e| HarnessError::io(d, e))?;
        write_file(&d.join("config.toml"), cfg.to_toml().as_bytes())?;
    }

    let mut buf = RolloutBuffer::with_capacity(ppo.horizon);
    let mut cache = ForwardCache::default();
    let mut input = vec![0f32; cfg.network.input];
    let mut updates = Vec::new();
    let mut episodes = Vec::new();
    let mut env_steps = 0u64;
    let mut run = Running::start(&sc, &mut rng);
    let mut rollout_rewards: Vec<f64> = Vec::new();

    let snapshot = |policy: &PolicyParams<f32>, rng: &ChaCha8Rng, steps: u64, n: u64| Checkpoint {
        policy: policy.clone(),
        rng: RngState::capture(rng),
        env_steps: steps,
        updates: n,
    };

    let normalize = |policy: &mut PolicyParams<f32>, x: &[f64], training: bool| -> Vec<f64> {
        if ppo.normalize_observations {
            policy.obs_norm.normalize(x, training)
        } else {
            x.to_vec()
        }
    };

    while env_steps < cfg.train.total_steps {
        let n = (cfg.train.total_steps - env_steps).min(ppo.horizon as u64) as usize;
        buf.clear();
        rollout_rewards.clear();
        for _ in 0..n {
            let x = normalize(&mut policy, &run.ep.observation().0, true);
            for (d, s) in input.iter_mut().zip(&x) {
                *d = *s as f32;
            }
            let (mean, value) = policy.net.forward(&policy.params, &input, &mut cache);
            let (mean, value) = (mean as f64, value as f64);
            let log_std = policy.log_std() as f64;
            let z: f64 = rng.sample(StandardNormal);
            let u = mean + log_std.exp() * z;
            let logp = gaussian_log_prob(u, mean, log_std);
            let throttle = squash(u);
            let mut raw = 0.0;
            let mut done = false;
            for _ in 0..cfg.episode.action_repeat {
                let step = run.ep.step(throttle);
                add(&mut run.reward, &step.reward);
                run.adas += step.row.adas_active as u64;
                run.min_distance = run.min_distance.min(step.row.distance);
                raw += step.reward.total;
                done = step.done;
                if done {
                    break;
                }
            }
            env_steps += 1;
            let mut r = if ppo.normalize_rewards {
                policy.reward_norm.scale(raw, done, true)
            } else {
                raw
            };
            // finishing the route continues at the current rate rather than
            // dropping to zero, otherwise stopping short of the exit pays
            match (done, run.ep.outcome) {
                (true, Some(Outcome::Completed)) => r += ppo.gamma * value,
                (true, Some(Outcome::Timeout)) if ppo.bootstrap_timeouts => {
                    let xf = normalize(&mut policy, &run.ep.observation().0, false);
                    for (d, s) in input.iter_mut().zip(&xf) {
                        *d = *s as f32;
                    }
                    r += ppo.gamma * policy.net.forward(&policy.params, &input, &mut cache).1 as f64;
                }
                _ => {}
            }
            let mut obs = [0.0; crate::rl::OBS_DIM];
            obs.copy_from_slice(&x);
            buf.push(obs, u, logp, value, r, done);
            if done {
                let e = &run.ep;
                rollout_rewards.push(run.reward.total);
                episodes.push(EpisodeRecord {
                    episode: episodes.len() as u64,
                    env_steps,
                    north_delay: e.north_delay,
                    north_speed: e.north_speed,
                    outcome: e.outcome.expect("done"),
                    regime: e.regime(),
                    ticks: e.tick,
                    adas_activations: run.adas,
                    min_distance: run.min_distance,
                    reward: run.reward,
                });
                run = Running::start(&sc, &mut rng);
            }
        }
        if buf.len() < ppo.minibatches {
            break;
        }
        // bootstrap from the state the next rollout starts in
        let last_done = *buf.dones.last().expect("non-empty");
        let bootstrap = if last_done {
            0.0
        } else {
            let x = normalize(&mut policy, &run.ep.observation().0, false);
            for (d, s) in input.iter_mut().zip(&x) {
                *d = *s as f32;
            }
            policy.net.forward(&policy.params, &input, &mut cache).1 as f64
        };
        buf.finish(ppo.gamma, ppo.lambda, bootstrap);

        let last_good = policy.clone();
        let index = updates.len();
        let mut step_cfg = ppo.clone();
        if ppo.anneal_lr {
            step_cfg.learning_rate *= 1.0 - index as f64 * ppo.horizon as f64 / cfg.train.total_steps as f64;
        }
        let stats = match ppo_update(&mut policy, &buf, &step_cfg, index, &mut rng) {
            Ok(s) => s,
            Err(e) => {
                save(out, "checkpoint.json", &snapshot(&last_good, &rng, env_steps, index as u64))?;
                write_logs(out, &updates, &episodes)?;
                return Err(e.into());
            }
        };
        if !policy.params.iter().all(|p| p.is_finite()) {
            save(out, "checkpoint.json", &snapshot(&last_good, &rng, env_steps, index as u64))?;
            write_logs(out, &updates, &episodes)?;
            return Err(TrainError::NonFiniteLoss {
                update: index,
                detail: "parameters became non-finite".into(),
            }
            .into());
        }
        let mean_episode_reward = if rollout_rewards.is_empty() {
            None
        } else {
            Some(rollout_rewards.iter().sum::<f64>() / rollout_rewards.len() as f64)
        };
        updates.push(UpdateRecord {
            update: index as u64 + 1,
            env_steps,
            episodes: episodes.len() as u64,
            mean_episode_reward,
            stats,
            log_std: policy.log_std() as f64,
        });
        let every = cfg.train.checkpoint_every;
        if every > 0 && updates.len() as u64 % every == 0 {
            let name = format!("checkpoints/update_{:06}.json", updates.len());
            save(out, &name, &snapshot(&policy, &rng, env_steps, updates.len() as u64))?;
        }
    }

    let checkpoint = snapshot(&policy, &rng, env_steps, updates.len() as u64);
    save(out, "checkpoint.json", &checkpoint)?;
    write_logs(out, &updates, &episodes)?;
    Ok(TrainOutcome {
        checkpoint,
        updates,
        episodes,
    })
}

fn write_logs(out: Option<&Path>, updates: &[UpdateRecord], episodes: &[EpisodeRecord]) -> Result<(), HarnessError> {
    if let Some(d) = out {
        write_file(&d.join("metrics.csv"), metrics_csv(updates).as_bytes())?;
        write_file(&d.join("episodes.csv"), episodes_csv(episodes).as_bytes())?;
    }
    Ok(())
}

/// Mean of `xs[range]` for the first and last `fraction` of the sequence.
pub fn decile_means(xs: &[f64], fraction: f64) -> Option<(f64, f64)> {
    let k = ((xs.len() as f64) * fraction).floor() as usize;
    if k == 0 {
        return None;
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&xs[..k]), mean(&xs[xs.len() - k..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.network.hidden = vec![8];
        c.train.total_steps = 300;
        c.ppo.horizon = 64;
        c
    }

    #[test]
    fn zero_steps_gives_initial_checkpoint() {
        let mut c = tiny();
        c.train.total_steps = 0;
        let dir = tempfile::tempdir().unwrap();
        let out = train(&c, Some(dir.path())).unwrap();
        assert!(out.updates.is_empty() && out.episodes.is_empty());
        assert_eq!(out.checkpoint.env_steps, 0);
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics, format!("{METRICS_COLUMNS}\n"));
        let bytes = std::fs::read(dir.path().join("checkpoint.json")).unwrap();
        let back = Checkpoint::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.policy.params, out.checkpoint.policy.params);
    }

    #[test]
    fn step_budget_is_respected() {
        let out = train(&tiny(), None).unwrap();
        assert_eq!(out.checkpoint.env_steps, 300);
        assert_eq!(out.updates.len(), 5);
        assert_eq!(out.updates.last().unwrap().env_steps, 300);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = train(&tiny(), None).unwrap();
        let b = train(&tiny(), None).unwrap();
        assert_eq!(a.checkpoint.policy.params, b.checkpoint.policy.params);
        assert_eq!(metrics_csv(&a.updates), metrics_csv(&b.updates));
    }

    #[test]
    fn decile_means_split() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert_eq!(decile_means(&xs, 0.1), Some((0.5, 18.5)));
        assert_eq!(decile_means(&xs[..5], 0.1), None);
    }
}
