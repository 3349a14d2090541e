use serde::{Deserialize, Serialize};

const VAR_EPS: f64 = 1e-8;

/// Per-dimension running mean and variance (Welford) with output clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNormalizer {
    pub count: u64,
    pub mean: Vec<f64>,
    /// Sum of squared deviations.
    pub m2: Vec<f64>,
    pub clip: f64,
}

impl RunningNormalizer {
    pub fn new(dim: usize, clip: f64) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            clip,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Population variance per dimension.
    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![0.0; self.dim()];
        }
        self.m2.iter().map(|s| (s / self.count as f64).max(0.0)).collect()
    }

    /// Normalizes without touching the statistics; identity below two samples.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2 {
            return x.to_vec();
        }
        let n = self.count as f64;
        x.iter()
            .zip(&self.mean)
            .zip(&self.m2)
            .map(|((v, m), s)| ((v - m) / ((s / n).max(0.0) + VAR_EPS).sqrt()).clamp(-self.clip, self.clip))
            .collect()
    }

    /// Updates with `x` when `training`, then normalizes it.
    pub fn normalize(&mut self, x: &[f64], training: bool) -> Vec<f64> {
        if training {
            self.update(x);
        }
        self.apply(x)
    }
}

/// Scales rewards by the running standard deviation of the discounted return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardScaler {
    pub gamma: f64,
    pub ret: f64,
    pub stats: RunningNormalizer,
}

impl RewardScaler {
    pub fn new(gamma: f64, clip: f64) -> Self {
        Self {
            gamma,
            ret: 0.0,
            stats: RunningNormalizer::new(1, clip),
        }
    }

    pub fn scale(&mut self, r: f64, done: bool, training: bool) -> f64 {
        if training {
            self.ret = self.ret * self.gamma + r;
            self.stats.update(&[self.ret]);
            if done {
                self.ret = 0.0;
            }
        }
        if self.stats.count < 2 {
            return r;
        }
        let sd = (self.stats.variance()[0] + VAR_EPS).sqrt();
        (r / sd).clamp(-self.stats.clip, self.stats.clip)
    }
}
