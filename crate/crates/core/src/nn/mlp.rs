use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    pub fn grad_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Recommended orthogonal-init gain.
    pub fn gain(self) -> f64 {
        match self {
            Activation::Tanh => 5.0 / 3.0,
            Activation::Relu => std::f64::consts::SQRT_2,
        }
    }
}

/// One affine layer inside a flat parameter vector. Weights are row-major
/// `[out][in]`, followed by `out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
}

impl Dense {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    pub fn biases(&self) -> std::ops::Range<usize> {
        let b = self.offset + self.inputs * self.outputs;
        b..b + self.outputs
    }

    pub fn len(&self) -> usize {
        (self.inputs + 1) * self.outputs
    }

    pub fn is_empty(&self) -> bool {
        self.outputs == 0
    }

    pub fn forward<T: Scalar>(&self, params: &[T], x: &[T], out: &mut Vec<T>) {
        debug_assert_eq!(x.len(), self.inputs);
        let w = &params[self.weights()];
        let b = &params[self.biases()];
        out.clear();
        for (o, row) in w.chunks_exact(self.inputs).enumerate() {
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += *wi * *xi;
            }
            out.push(acc);
        }
    }

    /// Accumulates parameter gradients for upstream gradient `dy` at input `x`
    /// and writes the input gradient into `dx` when given.
    pub fn backward<T: Scalar>(&self, params: &[T], x: &[T], dy: &[T], grads: &mut [T], dx: Option<&mut Vec<T>>) {
        let wr = self.weights();
        let br = self.biases();
        {
            let gw = &mut grads[wr.clone()];
            for (o, grow) in gw.chunks_exact_mut(self.inputs).enumerate() {
                let g = dy[o];
                if g == T::zero() {
                    continue;
                }
                for (gwi, xi) in grow.iter_mut().zip(x) {
                    *gwi += g * *xi;
                }
            }
        }
        for (gb, g) in grads[br].iter_mut().zip(dy) {
            *gb += *g;
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(self.inputs, T::zero());
            let w = &params[wr];
            for (o, row) in w.chunks_exact(self.inputs).enumerate() {
                let g = dy[o];
                if g == T::zero() {
                    continue;
                }
                for (d, wi) in dx.iter_mut().zip(row) {
                    *d += g * *wi;
                }
            }
        }
    }
}

/// Chain of dense layers with a hidden activation after every layer except,
/// optionally, the last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
    pub activate_last: bool,
}

/// Per-layer outputs kept for the backward pass; `values[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct MlpTrace<T> {
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> MlpTrace<T> {
    pub fn output(&self) -> &[T] {
        self.values.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

impl Mlp {
    /// Lays out layers of the given sizes starting at `offset`.
    pub fn new(sizes: &[usize], activation: Activation, activate_last: bool, offset: usize) -> Self {
        let mut layers = Vec::with_capacity(sizes.len().saturating_sub(1));
        let mut off = offset;
        for w in sizes.windows(2) {
            let d = Dense {
                inputs: w[0],
                outputs: w[1],
                offset: off,
            };
            off += d.len();
            layers.push(d);
        }
        Self {
            layers,
            activation,
            activate_last,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::len).sum()
    }

    pub fn end(&self) -> usize {
        self.layers.last().map(|l| l.offset + l.len()).unwrap_or(0)
    }

    pub fn forward<T: Scalar>(&self, params: &[T], input: &[T], trace: &mut MlpTrace<T>) {
        trace.values.resize(self.layers.len() + 1, Vec::new());
        trace.values[0].clear();
        trace.values[0].extend_from_slice(input);
        let n = self.layers.len();
        for (i, layer) in self.layers.iter().enumerate() {
            let (head, tail) = trace.values.split_at_mut(i + 1);
            let out = &mut tail[0];
            layer.forward(params, &head[i], out);
            if i + 1 < n || self.activate_last {
                for v in out.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
        }
    }

    /// Reverse pass for output gradient `d_out`; accumulates into `grads` and
    /// returns the gradient with respect to the input.
    pub fn backward<T: Scalar>(&self, params: &[T], trace: &MlpTrace<T>, d_out: &[T], grads: &mut [T]) -> Vec<T> {
        let n = self.layers.len();
        let mut dy: Vec<T> = d_out.to_vec();
        let mut dx = Vec::new();
        for i in (0..n).rev() {
            if i + 1 < n || self.activate_last {
                for (g, y) in dy.iter_mut().zip(&trace.values[i + 1]) {
                    *g *= self.activation.grad_from_output(*y);
                }
            }
            self.layers[i].backward(params, &trace.values[i], &dy, grads, Some(&mut dx));
            std::mem::swap(&mut dy, &mut dx);
        }
        dy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_affine() {
        let mlp = Mlp::new(&[2, 1], Activation::Tanh, false, 0);
        let params = [2.0f64, -1.0, 0.5];
        let mut tr = MlpTrace::default();
        mlp.forward(&params, &[3.0, 4.0], &mut tr);
        assert_eq!(tr.output(), &[2.5]);
    }

    #[test]
    fn zero_params_give_zero_output() {
        let mlp = Mlp::new(&[6, 8, 8, 2], Activation::Relu, false, 0);
        let params = vec![0.0f32; mlp.param_count()];
        let mut tr = MlpTrace::default();
        mlp.forward(&params, &[1.0, -2.0, 3.0, 0.5, 9.0, -1.0], &mut tr);
        assert_eq!(tr.output(), &[0.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mlp = Mlp::new(&[3, 4, 2], Activation::Tanh, false, 0);
        let params: Vec<f64> = (0..mlp.param_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut tr = MlpTrace::default();
        mlp.forward(&params, &[0.1, 0.2, 0.3], &mut tr);
        let mut g = vec![0.0; params.len()];
        mlp.backward(&params, &tr, &[0.0, 0.0], &mut g);
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
