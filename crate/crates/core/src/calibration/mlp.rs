//! Small fully-connected regressor: ReLU hidden layers, linear output.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math;

/// Dot product with four independent accumulators so the compiler can
/// keep the inner loop in vector registers; summation order is fixed.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    /// He-uniform weights, zero biases.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = math::sqrt(6.0 / inputs as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Dense { inputs, outputs, weights, biases: vec![0.0; outputs] }
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.weights.chunks_exact(self.inputs).zip(&self.biases)) {
            *o = b + dot(row, x);
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.weights.len() == self.inputs * self.outputs
            && self.biases.len() == self.outputs
            && math::all_finite(&self.weights)
            && math::all_finite(&self.biases)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`. First-layer biases are drawn from
    /// U(−1, 1) so the initial ReLU kinks spread across a unit-scaled input
    /// range instead of all passing through the origin; the output layer
    /// starts at zero so the initial prediction is the target mean.
    pub fn new<R: Rng>(widths: &[usize], rng: &mut R) -> Self {
        let mut layers: Vec<Dense> = widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        if let Some(first) = layers.first_mut() {
            for b in &mut first.biases {
                *b = rng.random_range(-1.0..1.0);
            }
        }
        if let Some(last) = layers.last_mut() {
            last.weights.fill(0.0);
        }
        Mlp { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp { layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn workspace(&self) -> Workspace {
        let sizes: Vec<usize> = self.layers.iter().map(|l| l.outputs).collect();
        Workspace {
            pre: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            post: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn forward_ws(&self, x: &[f64], ws: &mut Workspace) {
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = ws.post.split_at_mut(i);
            let input = if i == 0 { x } else { &done[i - 1][..] };
            layer.forward_into(input, &mut ws.pre[i]);
            for (p, &z) in rest[0].iter_mut().zip(&ws.pre[i]) {
                *p = if i == last || z > 0.0 { z } else { 0.0 };
            }
        }
    }

    /// Scalar output for a single input row.
    pub fn predict(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        self.forward_ws(x, ws);
        ws.post[self.layers.len() - 1][0]
    }

    /// Adds `scale · ∂(out − target)²/∂θ` into `grad`; returns the squared error.
    fn accumulate(&self, x: &[f64], target: f64, scale: f64, ws: &mut Workspace, grad: &mut Mlp) -> f64 {
        self.forward_ws(x, ws);
        let n = self.layers.len();
        let err = ws.post[n - 1][0] - target;
        ws.delta[n - 1][0] = 2.0 * err * scale;
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let input: &[f64] = if i == 0 { x } else { &ws.post[i - 1] };
            let g = &mut grad.layers[i];
            for (o, &d) in ws.delta[i].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, xi) in row.iter_mut().zip(input) {
                    *gw += d * xi;
                }
            }
            if i > 0 {
                let (lower, upper) = ws.delta.split_at_mut(i);
                let below = &mut lower[i - 1];
                below.fill(0.0);
                for (o, &d) in upper[0].iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (b, w) in below.iter_mut().zip(row) {
                        *b += d * w;
                    }
                }
                for (b, &z) in below.iter_mut().zip(&ws.pre[i - 1]) {
                    if z <= 0.0 {
                        *b = 0.0;
                    }
                }
            }
        }
        err * err
    }

    /// Mean-squared error over a batch and its gradient.
    pub fn loss_and_gradient(&self, inputs: &[Vec<f64>], targets: &[f64]) -> (f64, Mlp) {
        let mut grad = self.zeros_like();
        let mut ws = self.workspace();
        let loss = self.batch_gradient(inputs.iter().map(|v| &v[..]).zip(targets.iter().copied()), &mut ws, &mut grad);
        (loss, grad)
    }

    /// Overwrites `grad` with the batch-mean gradient; returns the batch MSE.
    pub(crate) fn batch_gradient<'a, I>(&self, batch: I, ws: &mut Workspace, grad: &mut Mlp) -> f64
    where
        I: ExactSizeIterator<Item = (&'a [f64], f64)>,
    {
        for l in &mut grad.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
        let n = batch.len();
        let scale = 1.0 / n as f64;
        let mut sse = 0.0;
        for (x, y) in batch {
            sse += self.accumulate(x, y, scale, ws, grad);
        }
        sse * scale
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn locate(&self, mut idx: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if idx < l.weights.len() {
                return (li, true, idx);
            }
            idx -= l.weights.len();
            if idx < l.biases.len() {
                return (li, false, idx);
            }
            idx -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter view: each layer's weights followed by its biases.
    pub fn param(&self, idx: usize) -> f64 {
        let (l, w, i) = self.locate(idx);
        if w { self.layers[l].weights[i] } else { self.layers[l].biases[i] }
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let (l, w, i) = self.locate(idx);
        if w { &mut self.layers[l].weights[i] } else { &mut self.layers[l].biases[i] }
    }

    /// `self += scale · other`, parameter-wise.
    pub(crate) fn axpy(&mut self, scale: f64, other: &Mlp) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += scale * y;
            }
        }
    }

    pub(crate) fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= s);
            l.biases.iter_mut().for_each(|b| *b *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| math::all_finite(&l.weights) && math::all_finite(&l.biases))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::new(&[2, 16, 16, 1], &mut rng);
        let xs: Vec<Vec<f64>> =
            (0..8).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, grad) = net.loss_and_gradient(&xs, &ys);
        let h = 1e-6;
        for idx in 0..net.param_count() {
            let mut p = net.clone();
            *p.param_mut(idx) += h;
            let lp = p.loss_and_gradient(&xs, &ys).0;
            *p.param_mut(idx) -= 2.0 * h;
            let lm = p.loss_and_gradient(&xs, &ys).0;
            let fd = (lp - lm) / (2.0 * h);
            let an = grad.param(idx);
            assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()) + 1e-8, "param {idx}: {fd} vs {an}");
        }
    }

    #[test]
    fn hidden_layers_rectify() {
        let net = Mlp {
            layers: vec![
                Dense { inputs: 1, outputs: 1, weights: vec![1.0], biases: vec![0.0] },
                Dense { inputs: 1, outputs: 1, weights: vec![-2.0], biases: vec![-1.0] },
            ],
        };
        let mut ws = net.workspace();
        assert_eq!(net.predict(&[3.0], &mut ws), -7.0);
        assert_eq!(net.predict(&[-3.0], &mut ws), -1.0);
    }

    #[test]
    fn flat_param_view_covers_all_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(&[2, 3, 1], &mut rng);
        assert_eq!(net.param_count(), 2 * 3 + 3 + 3 + 1);
        *net.param_mut(6) = 5.0;
        assert_eq!(net.layers[0].biases[0], 5.0);
        *net.param_mut(12) = -1.0;
        assert_eq!(net.layers[1].biases[0], -1.0);
    }
}
