use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Dense, Mlp, MlpTrace};
use crate::error::NnError;
use crate::scalar::Scalar;

/// Shape of the actor-critic network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Policy and value heads read the same hidden trunk.
    pub shared_trunk: bool,
    pub init_log_std: f64,
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            input: 6,
            hidden: vec![128, 128, 128],
            activation: Activation::Tanh,
            shared_trunk: true,
            init_log_std: 0.5f64.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layout {
    Shared { trunk: Mlp, heads: Dense },
    Split { actor: Mlp, critic: Mlp },
}

/// Parameter layout and evaluation of the policy/value network. Parameters
/// live in one flat slice; the last entry is the log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    spec: NetSpec,
    layout: Layout,
    n_params: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ForwardCache<T> {
    a: MlpTrace<T>,
    b: MlpTrace<T>,
}

impl ActorCritic {
    pub fn new(spec: NetSpec) -> Result<Self, NnError> {
        if spec.input == 0 || spec.hidden.is_empty() || spec.hidden.contains(&0) {
            return Err(NnError::Shape(format!("invalid network spec {spec:?}")));
        }
        if !spec.init_log_std.is_finite() {
            return Err(NnError::Shape("init_log_std must be finite".into()));
        }
        let mut sizes = vec![spec.input];
        sizes.extend_from_slice(&spec.hidden);
        let layout = if spec.shared_trunk {
            let trunk = Mlp::new(&sizes, spec.activation, true, 0);
            let heads = Dense {
                inputs: *spec.hidden.last().unwrap(),
                outputs: 2,
                offset: trunk.end(),
            };
            Layout::Shared { trunk, heads }
        } else {
            sizes.push(1);
            let actor = Mlp::new(&sizes, spec.activation, false, 0);
            let critic = Mlp::new(&sizes, spec.activation, false, actor.end());
            Layout::Split { actor, critic }
        };
        let n_params = match &layout {
            Layout::Shared { heads, .. } => heads.offset + heads.len() + 1,
            Layout::Split { critic, .. } => critic.end() + 1,
        };
        Ok(Self { spec, layout, n_params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    pub fn log_std_index(&self) -> usize {
        self.n_params - 1
    }

    /// Orthogonal hidden weights, small policy output, zero biases.
    pub fn init<T: Scalar, R: Rng>(&self, rng: &mut R) -> Vec<T> {
        let mut p = vec![T::zero(); self.n_params];
        let gain = self.spec.activation.gain();
        let init_mlp = |mlp: &Mlp, out_gain: f64, p: &mut Vec<T>, rng: &mut R| {
            let n = mlp.layers.len();
            for (i, l) in mlp.layers.iter().enumerate() {
                let g = if i + 1 == n && !mlp.activate_last { out_gain } else { gain };
                orthogonal_into(&mut p[l.weights()], l.outputs, l.inputs, g, rng);
            }
        };
        match &self.layout {
            Layout::Shared { trunk, heads } => {
                init_mlp(trunk, gain, &mut p, rng);
                orthogonal_into(&mut p[heads.weights()], 2, heads.inputs, 1.0, rng);
                let w = heads.weights().start;
                for v in &mut p[w..w + heads.inputs] {
                    *v *= T::lit(0.01);
                }
            }
            Layout::Split { actor, critic } => {
                init_mlp(actor, 0.01, &mut p, rng);
                init_mlp(critic, 1.0, &mut p, rng);
            }
        }
        p[self.log_std_index()] = T::lit(self.spec.init_log_std);
        p
    }

    /// Pre-squash action mean and state value.
    pub fn forward<T: Scalar>(&self, params: &[T], input: &[T], cache: &mut ForwardCache<T>) -> (T, T) {
        debug_assert_eq!(params.len(), self.n_params);
        match &self.layout {
            Layout::Shared { trunk, heads } => {
                trunk.forward(params, input, &mut cache.a);
                let mut out = Vec::with_capacity(2);
                heads.forward(params, cache.a.output(), &mut out);
                (out[0], out[1])
            }
            Layout::Split { actor, critic } => {
                actor.forward(params, input, &mut cache.a);
                critic.forward(params, input, &mut cache.b);
                (cache.a.output()[0], cache.b.output()[0])
            }
        }
    }

    /// Accumulates gradients of a loss with partials `d_mean`, `d_value`
    /// wrt the two outputs. The log-std gradient is left to the caller.
    pub fn backward<T: Scalar>(&self, params: &[T], cache: &ForwardCache<T>, d_mean: T, d_value: T, grads: &mut [T]) {
        match &self.layout {
            Layout::Shared { trunk, heads } => {
                let mut dh = Vec::new();
                heads.backward(params, cache.a.output(), &[d_mean, d_value], grads, Some(&mut dh));
                trunk.backward(params, &cache.a, &dh, grads);
            }
            Layout::Split { actor, critic } => {
                actor.backward(params, &cache.a, &[d_mean], grads);
                critic.backward(params, &cache.b, &[d_value], grads);
            }
        }
    }
}

/// Fills a row-major `rows x cols` block with a scaled (semi-)orthogonal matrix.
pub fn orthogonal_into<T: Scalar, R: Rng>(out: &mut [T], rows: usize, cols: usize, gain: f64, rng: &mut R) {
    // orthonormalize along the longer dimension's vectors of the shorter count
    let transpose = rows > cols;
    let (k, n) = if transpose { (cols, rows) } else { (rows, cols) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let v = if transpose { basis[c][r] } else { basis[r][c] };
            out[r * cols + c] = T::lit(gain * v);
        }
    }
}
