use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2.5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    /// One update. Parameters whose `mask` entry is false are left alone and
    /// their moments untouched.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [T], grads: &[T], mask: Option<&[bool]>) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::Shape(format!(
                "adam state has {} entries, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient(i));
        }
        self.t += 1;
        let b1 = T::lit(cfg.beta1);
        let b2 = T::lit(cfg.beta2);
        let t = self.t as i32;
        let c1 = T::one() - T::lit(cfg.beta1.powi(t));
        let c2 = T::one() - T::lit(cfg.beta2.powi(t));
        let lr = T::lit(cfg.lr);
        let eps = T::lit(cfg.eps);
        for i in 0..params.len() {
            if let Some(m) = mask {
                if !m[i] {
                    continue;
                }
            }
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_has_magnitude_lr() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.2, 1e-3] {
            let mut a = Adam::<f64>::new(1);
            let mut p = [1.0];
            a.step(&cfg, &mut p, &[g], None).unwrap();
            let moved = 1.0 - p[0];
            // |g| / (|g| + eps) ~ 1
            let expect = cfg.lr * g.signum() * g.abs() / (g.abs() + cfg.eps);
            assert!((moved - expect).abs() < 1e-9, "{moved} vs {expect}");
        }
    }

    #[test]
    fn zero_grads_keep_params() {
        let cfg = AdamConfig::default();
        let mut a = Adam::<f64>::new(2);
        a.m = vec![0.5, -0.5];
        a.v = vec![0.0, 0.0];
        let mut p = [1.0, 2.0];
        let mut zero_state = Adam::<f64>::new(2);
        zero_state.step(&cfg, &mut p, &[0.0, 0.0], None).unwrap();
        assert_eq!(p, [1.0, 2.0]);
        a.step(&cfg, &mut [0.0, 0.0], &[0.0, 0.0], None).unwrap();
        assert_eq!(a.m, vec![0.45, -0.45]);
    }

    #[test]
    fn converges_on_quadratic() {
        let cfg = AdamConfig {
            lr: 1e-2,
            ..AdamConfig::default()
        };
        let mut a = Adam::<f64>::new(1);
        let mut w = [0.0];
        for _ in 0..100_000 {
            let g = 2.0 * (w[0] - 3.0);
            a.step(&cfg, &mut w, &[g], None).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn masked_params_are_frozen() {
        let cfg = AdamConfig::default();
        let mut a = Adam::<f32>::new(3);
        let mut p = [1.0f32, 1.0, 1.0];
        for _ in 0..10 {
            a.step(&cfg, &mut p, &[1.0, 1.0, 1.0], Some(&[true, false, true])).unwrap();
        }
        assert_eq!(p[1], 1.0);
        assert!(p[0] < 1.0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Adam::<f64>::new(2);
        let err = a.step(&AdamConfig::default(), &mut [0.0, 0.0], &[0.0, f64::NAN], None);
        assert!(matches!(err, Err(NnError::NonFiniteGradient(1))));
        assert_eq!(a.t, 0);
    }
}
