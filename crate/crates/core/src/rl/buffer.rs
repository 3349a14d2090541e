use super::observation::OBS_DIM;

/// Fixed-length rollout storage. Observations are stored already normalized.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs: Vec<[f64; OBS_DIM]>,
    /// Pre-squash action sample.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    /// Rewards as seen by the learner (after scaling).
    pub rewards: Vec<f64>,
    /// True when the episode ended after this step.
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            obs: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn clear(&mut self) {
        self.obs.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
        self.advantages.clear();
        self.returns.clear();
    }

    pub fn push(&mut self, obs: [f64; OBS_DIM], action: f64, log_prob: f64, value: f64, reward: f64, done: bool) {
        self.obs.push(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    /// Fills advantages and returns.
    pub fn finish(&mut self, gamma: f64, lambda: f64, bootstrap_value: f64) {
        let (a, r) = gae(&self.rewards, &self.values, &self.dones, gamma, lambda, bootstrap_value);
        self.advantages = a;
        self.returns = r;
    }
}

/// Generalized advantage estimation. `bootstrap_value` is the value of the
/// state after the last step and is ignored if that step ended an episode.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
    bootstrap_value: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "buffer arrays differ in length");
    let mut adv = vec![0.0; n];
    let mut last = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n { bootstrap_value } else { values[t + 1] };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        last = delta + gamma * lambda * live * last;
        adv[t] = last;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Rescales to zero mean and unit (population) standard deviation.
pub fn standardize(xs: &mut [f64]) {
    if xs.len() < 2 {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    for x in xs {
        *x = (*x - mean) / sd;
    }
}
