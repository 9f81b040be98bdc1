use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::learn::LearnError;

/// Layer nonlinearity. The hidden layers are tanh; the value head is linear.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub act: Activation,
    /// Row-major: `w[o * in_dim + i]` weighs input `i` into output `o`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// A dense action-value network.
#[derive(Clone, Debug)]
pub struct QNetwork {
    layers: Vec<DenseLayer>,
}

impl QNetwork {
    /// Builds a network with the given layer widths (input first, action
    /// count last), tanh hidden layers, a linear head, and symmetric uniform
    /// initialization scaled by fan-in plus fan-out. The draw order (layer
    /// by layer, row-major) is fixed; a seed fully determines the weights.
    pub fn new(dims: &[usize], seed: u64) -> QNetwork {
        assert!(dims.len() >= 2, "need at least input and output widths");
        assert!(dims.iter().all(|d| *d >= 1), "zero-width layer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (idx, pair) in dims.windows(2).enumerate() {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let act = if idx + 2 == dims.len() {
                Activation::Linear
            } else {
                Activation::Tanh
            };
            let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
            let w = (0..in_dim * out_dim)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                act,
                w,
                b: vec![0.0; out_dim],
            });
        }
        QNetwork { layers }
    }

    /// The production shape: four 256-wide tanh layers and a linear head.
    pub fn standard(input_dim: usize, n_actions: usize, seed: u64) -> QNetwork {
        QNetwork::new(&[input_dim, 256, 256, 256, 256, n_actions], seed)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        self.layers
            .iter()
            .map(|l| (l.in_dim, l.out_dim, l.act))
            .collect()
    }

    pub(crate) fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn from_layers(layers: Vec<DenseLayer>) -> QNetwork {
        assert!(!layers.is_empty());
        QNetwork { layers }
    }

    /// Action values for one state.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.input_dim() {
            return Err(LearnError::InputShape {
                got: x.len(),
                expected: self.input_dim(),
            });
        }
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Forward pass that records every layer's post-activation output.
    pub(crate) fn forward_trace(&self, x: &[f64], trace: &mut Trace) {
        debug_assert_eq!(x.len(), self.input_dim());
        trace.resize_for(self);
        let mut input = x;
        for (layer, out) in self.layers.iter().zip(&mut trace.acts) {
            layer.forward_into(input, out);
            input = out;
        }
    }

    /// Accumulates gradients for one sample given dLoss/dOutput.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        trace: &Trace,
        d_output: &[f64],
        grads: &mut Gradients,
    ) {
        debug_assert_eq!(d_output.len(), self.output_dim());
        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = d_output
            .iter()
            .zip(&trace.acts[last])
            .map(|(d, y)| d * self.layers[last].act.derivative_from_output(*y))
            .collect();

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 { x } else { &trace.acts[l - 1] };

            let gw = &mut grads.w[l];
            for (o, d) in delta.iter().enumerate() {
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                axpy(*d, input, row);
            }
            for (g, d) in grads.b[l].iter_mut().zip(&delta) {
                *g += d;
            }

            if l > 0 {
                let prev = &self.layers[l - 1];
                let mut d_input = vec![0.0; layer.in_dim];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                    axpy(*d, row, &mut d_input);
                }
                for (di, y) in d_input.iter_mut().zip(&trace.acts[l - 1]) {
                    *di *= prev.act.derivative_from_output(*y);
                }
                delta = d_input;
            }
        }
    }

    /// One plain gradient-descent step.
    #[cfg(test)]
    pub(crate) fn apply_step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grads.w.iter().zip(&grads.b)) {
            for (w, g) in layer.w.iter_mut().zip(gw) {
                *w -= learning_rate * g;
            }
            for (b, g) in layer.b.iter_mut().zip(gb) {
                *b -= learning_rate * g;
            }
        }
    }

    /// One RMSProp step: each parameter's raw gradient is divided by the
    /// root of its running squared-gradient average held in `state`. Large
    /// gradients take bounded sign-like steps while gradients below
    /// `sqrt(epsilon)` fall back to plain scaled descent.
    pub(crate) fn apply_rmsprop_step(
        &mut self,
        grads: &Gradients,
        state: &mut Gradients,
        learning_rate: f64,
        decay: f64,
        epsilon: f64,
    ) {
        for (layer, ((gw, gb), (sw, sb))) in self.layers.iter_mut().zip(
            grads
                .w
                .iter()
                .zip(&grads.b)
                .zip(state.w.iter_mut().zip(state.b.iter_mut())),
        ) {
            for ((w, g), s) in layer.w.iter_mut().zip(gw).zip(sw.iter_mut()) {
                *s = decay * *s + (1.0 - decay) * g * g;
                *w -= learning_rate * g / (*s + epsilon).sqrt();
            }
            for ((b, g), s) in layer.b.iter_mut().zip(gb).zip(sb.iter_mut()) {
                *s = decay * *s + (1.0 - decay) * g * g;
                *b -= learning_rate * g / (*s + epsilon).sqrt();
            }
        }
    }

    /// Copies another network's weights into this one (target sync).
    pub fn copy_from(&mut self, other: &QNetwork) {
        assert_eq!(self.layer_shapes(), other.layer_shapes());
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.w.copy_from_slice(&src.w);
            dst.b.copy_from_slice(&src.b);
        }
    }
}

impl DenseLayer {
    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.in_dim);
        out.clear();
        out.extend(
            self.w
                .chunks_exact(self.in_dim)
                .zip(&self.b)
                .map(|(row, bias)| self.act.apply(dot(row, input) + bias)),
        );
    }
}

/// Dot product with four independent accumulators so the additions pipeline.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (xa, xb) in (&mut ca).zip(&mut cb) {
        acc[0] += xa[0] * xb[0];
        acc[1] += xa[1] * xb[1];
        acc[2] += xa[2] * xb[2];
        acc[3] += xa[3] * xb[3];
    }
    for (xa, xb) in ca.remainder().iter().zip(cb.remainder()) {
        acc[0] += xa * xb;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn axpy(scale: f64, src: &[f64], dst: &mut [f64]) {
    debug_assert_eq!(src.len(), dst.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

/// Per-layer activation buffers reused across samples.
#[derive(Clone, Debug, Default)]
pub(crate) struct Trace {
    pub acts: Vec<Vec<f64>>,
}

impl Trace {
    fn resize_for(&mut self, net: &QNetwork) {
        self.acts.resize(net.layers.len(), Vec::new());
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Gradient accumulators matching a network's shape.
#[derive(Clone, Debug)]
pub(crate) struct Gradients {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Gradients {
        Gradients {
            w: net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for g in self.w.iter_mut().chain(self.b.iter_mut()) {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// The Q-learning regression target: the reward alone on terminal
/// transitions, otherwise reward plus the discounted best next value.
pub fn td_target(reward: f64, done: bool, next_q: &[f64], discount: f64) -> f64 {
    if done {
        reward
    } else {
        let best = next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        reward + discount * best
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (idx, v) in q.iter().enumerate().skip(1) {
        if *v > q[best] {
            best = idx;
        }
    }
    best
}

/// Compares analytic gradients of a squared-error loss against central
/// finite differences, probing every `stride`-th parameter, and returns the
/// worst relative error. Used by tests and the verification suite.
pub fn gradient_check(dims: &[usize], seed: u64, stride: usize) -> f64 {
    let mut net = QNetwork::new(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(0.0..1.0)).collect();
    let action = rng.random_range(0..*dims.last().unwrap());
    let y_target = rng.random_range(-1.0..1.0);

    let loss = |net: &QNetwork, x: &[f64]| {
        let q = net.forward(x).unwrap();
        let err = q[action] - y_target;
        err * err
    };

    let mut trace = Trace::default();
    net.forward_trace(&x, &mut trace);
    let mut d_out = vec![0.0; net.output_dim()];
    d_out[action] = 2.0 * (trace.output()[action] - y_target);
    let mut grads = Gradients::zeros_like(&net);
    net.backward(&x, &trace, &d_out, &mut grads);

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..net.layers.len() {
        for idx in (0..net.layers[l].w.len()).step_by(stride.max(1)) {
            let original = net.layers[l].w[idx];
            net.layers[l].w[idx] = original + h;
            let up = loss(&net, &x);
            net.layers[l].w[idx] = original - h;
            let down = loss(&net, &x);
            net.layers[l].w[idx] = original;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grads.w[l][idx], numeric));
        }
        for idx in (0..net.layers[l].b.len()).step_by(stride.max(1)) {
            let original = net.layers[l].b[idx];
            net.layers[l].b[idx] = original + h;
            let up = loss(&net, &x);
            net.layers[l].b[idx] = original - h;
            let down = loss(&net, &x);
            net.layers[l].b[idx] = original;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grads.b[l][idx], numeric));
        }
    }
    worst
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        // Both effectively zero; finite differences are pure noise here.
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_network_outputs_zero() {
        let mut net = QNetwork::new(&[4, 8, 3], 1);
        for layer in &mut net.layers {
            layer.w.iter_mut().for_each(|w| *w = 0.0);
        }
        let q = net.forward(&[0.3, 0.1, 0.9, 0.2]).unwrap();
        assert_eq!(q, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = QNetwork::new(&[4, 8, 3], 1);
        assert!(matches!(
            net.forward(&[0.0; 3]),
            Err(LearnError::InputShape { got: 3, expected: 4 })
        ));
    }

    #[test]
    fn forward_is_finite_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..20 {
            let net = QNetwork::new(&[10, 16, 16, 5], seed);
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.0)).collect();
            assert!(net.forward(&x).unwrap().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn forward_matches_naive_reimplementation() {
        // Straightforward nested-loop forward pass, kept deliberately
        // independent of the production kernels.
        fn naive_forward(net: &QNetwork, x: &[f64]) -> Vec<f64> {
            let mut current = x.to_vec();
            for layer in net.layers() {
                let mut next = vec![0.0; layer.out_dim];
                #[allow(clippy::needless_range_loop)]
                for o in 0..layer.out_dim {
                    let mut sum = layer.b[o];
                    for i in 0..layer.in_dim {
                        sum += layer.w[o * layer.in_dim + i] * current[i];
                    }
                    next[o] = match layer.act {
                        Activation::Tanh => sum.tanh(),
                        Activation::Linear => sum,
                    };
                }
                current = next;
            }
            current
        }

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..100 {
            let dims = [
                rng.random_range(1..12),
                rng.random_range(1..20),
                rng.random_range(1..20),
                rng.random_range(1..6),
            ];
            let net = QNetwork::new(&dims, seed);
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = net.forward(&x).unwrap();
            let slow = naive_forward(&net, &x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn initialization_is_seeded_and_bounded() {
        let a = QNetwork::new(&[6, 12, 4], 5);
        let b = QNetwork::new(&[6, 12, 4], 5);
        let c = QNetwork::new(&[6, 12, 4], 6);
        assert_eq!(a.layers[0].w, b.layers[0].w);
        assert_ne!(a.layers[0].w, c.layers[0].w);
        for layer in a.layers() {
            let limit = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            assert!(layer.w.iter().all(|w| w.abs() < limit));
            assert!(layer.b.iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_small_shapes() {
        for (dims, seed) in [
            (vec![3, 8, 2], 1u64),
            (vec![5, 16, 16, 3], 2),
            (vec![2, 4, 4, 4, 4, 2], 3),
        ] {
            let worst = gradient_check(&dims, seed, 1);
            assert!(worst < 1e-4, "dims {dims:?}: relative error {worst}");
        }
    }

    #[test]
    fn gradients_match_finite_differences_on_production_shapes() {
        // Probing every parameter of the 256-wide stack is too slow; a
        // strided sample still covers every layer.
        for (dims, seed) in [
            (vec![68, 256, 256, 256, 256, 9], 4u64),
            (vec![82, 256, 256, 256, 256, 10], 5),
        ] {
            let worst = gradient_check(&dims, seed, 4093);
            assert!(worst < 1e-4, "dims {dims:?}: relative error {worst}");
        }
    }

    #[test]
    fn descent_reduces_loss_on_a_frozen_sample() {
        let mut net = QNetwork::new(&[6, 32, 32, 4], 11);
        let x: Vec<f64> = vec![0.2, 0.9, 0.1, 0.5, 0.7, 0.3];
        let action = 2;
        let target = 1.5;
        let mut trace = Trace::default();
        let mut grads = Gradients::zeros_like(&net);
        let mut last = f64::INFINITY;
        for step in 0..100 {
            net.forward_trace(&x, &mut trace);
            let err = trace.output()[action] - target;
            let loss = err * err;
            assert!(
                loss < last || loss < 1e-12,
                "loss {loss} did not drop at step {step}"
            );
            last = loss;
            let mut d_out = vec![0.0; 4];
            d_out[action] = 2.0 * err;
            grads.reset();
            net.backward(&x, &trace, &d_out, &mut grads);
            net.apply_step(&grads, 0.01);
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn rmsprop_converges_and_bounds_large_gradients() {
        let mut net = QNetwork::new(&[6, 32, 32, 4], 11);
        let x: Vec<f64> = vec![0.2, 0.9, 0.1, 0.5, 0.7, 0.3];
        let action = 1;
        let target = 300.0;
        let mut trace = Trace::default();
        let mut grads = Gradients::zeros_like(&net);
        let mut state = Gradients::zeros_like(&net);
        let before = net.forward(&x).unwrap()[action];
        for step in 0..400 {
            net.forward_trace(&x, &mut trace);
            let err = trace.output()[action] - target;
            let mut d_out = vec![0.0; 4];
            d_out[action] = 2.0 * err;
            grads.reset();
            net.backward(&x, &trace, &d_out, &mut grads);
            net.apply_rmsprop_step(&grads, &mut state, 0.05, 0.95, 0.01);
            if step == 0 {
                let after = net.forward(&x).unwrap()[action];
                let jump = (after - before).abs();
                assert!(jump < 50.0, "first step moved the output by {jump}");
            }
        }
        let err = net.forward(&x).unwrap()[action] - target;
        assert!(err.abs() < 1.0, "residual error {err} after adaptive descent");
    }

    #[test]
    fn td_target_handles_terminals_and_discounts() {
        assert_eq!(td_target(1.0, true, &[5.0, 9.0], 0.9), 1.0);
        assert_eq!(td_target(1.0, false, &[0.5, 2.0], 0.5), 2.0);
        assert_eq!(td_target(0.7, false, &[0.5, 2.0], 0.0), 0.7);
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(greedy_action(&[0.1, 0.9, 0.9]), 1);
        assert_eq!(greedy_action(&[0.5]), 0);
        assert_eq!(greedy_action(&[-1.0, -1.0, -0.5]), 2);
    }

    #[test]
    fn copy_from_synchronizes_exactly() {
        let mut a = QNetwork::new(&[4, 8, 2], 1);
        let b = QNetwork::new(&[4, 8, 2], 2);
        a.copy_from(&b);
        for (la, lb) in a.layers().iter().zip(b.layers()) {
            assert_eq!(la.w, lb.w);
            assert_eq!(la.b, lb.b);
        }
    }
}
