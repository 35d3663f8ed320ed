use serde::{Deserialize, Serialize};

use crate::rng::RandomStream;
use crate::types::dot;

/// Fully connected network with ReLU hidden layers and a linear output
/// layer. Parameters live in one flat vector, layer by layer, each layer as
/// its weight matrix (row per output unit) followed by its biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Weights uniform in +-sqrt(1 / fan_in), biases zero.
    pub fn new(sizes: &[usize], rng: &mut RandomStream) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::with_capacity(Self::param_count(sizes));
        for w in sizes.windows(2) {
            let bound = (1.0 / w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.uniform_range(-bound, bound)));
            params.extend(std::iter::repeat(0.0).take(w[1]));
        }
        Mlp { sizes: sizes.to_vec(), params }
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Forward pass keeping every layer's post-activation output in `acts`
    /// (hidden layers after ReLU, then the output).
    pub fn forward(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        Self::forward_with(&self.sizes, &self.params, x, acts);
    }

    fn forward_with(sizes: &[usize], params: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) {
        let layers = sizes.len() - 1;
        acts.resize(layers, Vec::new());
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let w = &params[offset..offset + n_in * n_out];
            let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let (prev, rest) = acts.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &prev[l - 1] };
            let out = &mut rest[0];
            out.clear();
            for j in 0..n_out {
                let z = dot(&w[j * n_in..(j + 1) * n_in], input) + b[j];
                out.push(if l + 1 < layers { z.max(0.0) } else { z });
            }
        }
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward(x, &mut acts);
        acts.pop().expect("at least one layer")
    }

    pub fn output_with(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        Self::forward_with(&self.sizes, params, x, &mut acts);
        acts.pop().expect("at least one layer")
    }

    /// Accumulates dL/dparams into `grad` given dL/doutput, using the
    /// activations of a preceding [`Mlp::forward`] on the same input.
    pub fn backward(&self, x: &[f64], acts: &[Vec<f64>], dout: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = dout.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
            for j in 0..n_out {
                let dj = delta[j];
                if dj == 0.0 {
                    continue;
                }
                let g = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                for (gi, &xi) in g.iter_mut().zip(input) {
                    *gi += dj * xi;
                }
                grad[off + n_in * n_out + j] += dj;
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut next = vec![0.0; n_in];
                for j in 0..n_out {
                    let dj = delta[j];
                    if dj == 0.0 {
                        continue;
                    }
                    for (ni, &wji) in next.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *ni += dj * wji;
                    }
                }
                // ReLU derivative, zero at the kink
                for (ni, &a) in next.iter_mut().zip(&acts[l - 1]) {
                    if a <= 0.0 {
                        *ni = 0.0;
                    }
                }
                delta = next;
            }
        }
    }

    /// Gradient of sum_j (target_j - out_j)^2 over the output units listed
    /// in `active` (all units when `None`).
    pub fn squared_loss_grad(&self, x: &[f64], target: &[f64], active: Option<std::ops::Range<usize>>) -> (f64, Vec<f64>) {
        let mut acts = Vec::new();
        self.forward(x, &mut acts);
        let out = acts.last().expect("output layer");
        let range = active.unwrap_or(0..out.len());
        let mut dout = vec![0.0; out.len()];
        let mut loss = 0.0;
        for (t, j) in target.iter().zip(range) {
            let r = t - out[j];
            loss += r * r;
            dout[j] = -2.0 * r;
        }
        let mut grad = vec![0.0; self.params.len()];
        self.backward(x, &acts, &dout, &mut grad);
        (loss, grad)
    }

    /// Smallest |pre-activation| over all hidden units, for steering
    /// finite-difference checks away from ReLU kinks.
    pub fn min_abs_preactivation(&self, x: &[f64]) -> f64 {
        let layers = self.sizes.len() - 1;
        let mut input = x.to_vec();
        let mut offset = 0;
        let mut best = f64::INFINITY;
        for l in 0..layers - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let z: Vec<f64> = (0..n_out).map(|j| dot(&w[j * n_in..(j + 1) * n_in], &input) + b[j]).collect();
            best = z.iter().fold(best, |m, v| m.min(v.abs()));
            input = z.into_iter().map(|v| v.max(0.0)).collect();
        }
        best
    }
}

/// Scalar reward regressor over features: n -> 10 ReLU -> 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardMlp {
    net: Mlp,
}

impl RewardMlp {
    pub const HIDDEN: usize = 10;

    pub fn new(feature_dim: usize, rng: &mut RandomStream) -> Self {
        RewardMlp { net: Mlp::new(&[feature_dim, Self::HIDDEN, 1], rng) }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn predict(&self, phi: &[f64]) -> f64 {
        self.net.output(phi)[0]
    }

    /// One SGD step on (r - net(phi))^2.
    pub fn step(&mut self, phi: &[f64], r: f64, alpha: f64) {
        let (_, grad) = self.net.squared_loss_grad(phi, &[r], None);
        for (p, g) in self.net.params.iter_mut().zip(&grad) {
            *p -= alpha * g;
        }
    }
}

/// Value network for the racer: one subnetwork per feature dimension
/// (input -> 20 -> 20 -> A*heads) whose per-action heads are concatenated,
/// so output(s, a) has `subnets * heads` entries ordered dimension-major.
/// Q-learning uses a single subnetwork with one head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RacerValueNet {
    num_actions: usize,
    heads: usize,
    subnets: Vec<Mlp>,
}

impl RacerValueNet {
    pub const HIDDEN: usize = 20;

    pub fn new(state_dim: usize, num_actions: usize, subnets: usize, heads: usize, rng: &mut RandomStream) -> Self {
        let sizes = [state_dim, Self::HIDDEN, Self::HIDDEN, num_actions * heads];
        RacerValueNet { num_actions, heads, subnets: (0..subnets).map(|_| Mlp::new(&sizes, rng)).collect() }
    }

    pub fn state_dim(&self) -> usize {
        self.subnets[0].input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn outputs(&self) -> usize {
        self.subnets.len() * self.heads
    }

    pub fn subnets(&self) -> &[Mlp] {
        &self.subnets
    }

    pub fn subnets_mut(&mut self) -> &mut [Mlp] {
        &mut self.subnets
    }

    pub fn param_count(&self) -> usize {
        self.subnets.iter().map(|m| m.params.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.subnets.iter().flat_map(|m| m.params.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for m in &mut self.subnets {
            let n = m.params.len();
            m.params.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    /// Outputs of every action, laid out [a][k].
    pub fn predict_all_into(&self, s: &[f64], out: &mut [f64]) {
        let k_total = self.outputs();
        let mut acts = Vec::new();
        for (dim, net) in self.subnets.iter().enumerate() {
            net.forward(s, &mut acts);
            let o = acts.last().expect("output layer");
            for a in 0..self.num_actions {
                let src = &o[a * self.heads..(a + 1) * self.heads];
                out[a * k_total + dim * self.heads..a * k_total + (dim + 1) * self.heads].copy_from_slice(src);
            }
        }
    }

    pub fn predict_into(&self, s: &[f64], a: usize, out: &mut [f64]) {
        let mut acts = Vec::new();
        for (dim, net) in self.subnets.iter().enumerate() {
            net.forward(s, &mut acts);
            let o = acts.last().expect("output layer");
            out[dim * self.heads..(dim + 1) * self.heads].copy_from_slice(&o[a * self.heads..(a + 1) * self.heads]);
        }
    }

    /// Squared loss over action `a`'s outputs and the gradient with respect
    /// to the flat parameter vector.
    pub fn loss_grad(&self, s: &[f64], a: usize, target: &[f64]) -> (f64, Vec<f64>) {
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(self.param_count());
        for (dim, net) in self.subnets.iter().enumerate() {
            let (l, g) = net.squared_loss_grad(
                s,
                &target[dim * self.heads..(dim + 1) * self.heads],
                Some(a * self.heads..(a + 1) * self.heads),
            );
            loss += l;
            grad.extend(g);
        }
        (loss, grad)
    }

    pub fn sgd_step(&mut self, s: &[f64], a: usize, target: &[f64], alpha: f64) {
        let heads = self.heads;
        let mut acts = Vec::new();
        for (dim, net) in self.subnets.iter_mut().enumerate() {
            net.forward(s, &mut acts);
            let o = acts.last().expect("output layer");
            let mut dout = vec![0.0; o.len()];
            for u in 0..heads {
                dout[a * heads + u] = -2.0 * (target[dim * heads + u] - o[a * heads + u]);
            }
            let mut grad = vec![0.0; net.params.len()];
            net.backward(s, &acts, &dout, &mut grad);
            for (p, g) in net.params.iter_mut().zip(&grad) {
                *p -= alpha * g;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_shapes() {
        let mut rng = RandomStream::new(1);
        let net = RacerValueNet::new(120, 3, 3, 11, &mut rng);
        assert_eq!(net.outputs(), 33);
        let s = vec![0.1; 120];
        let mut all = vec![0.0; 99];
        net.predict_all_into(&s, &mut all);
        let mut one = vec![0.0; 33];
        net.predict_into(&s, 2, &mut one);
        assert_eq!(&all[66..99], one.as_slice());
    }

    #[test]
    fn reward_mlp_fits_one_sample() {
        let mut rng = RandomStream::new(2);
        let mut m = RewardMlp::new(5, &mut rng);
        let phi = [1.0, 0.0, 1.0, 0.0, 0.0];
        for _ in 0..500 {
            m.step(&phi, 0.8, 0.05);
        }
        assert!((m.predict(&phi) - 0.8).abs() < 1e-6);
    }

    #[test]
    fn step_leaves_other_actions_alone() {
        let mut rng = RandomStream::new(3);
        let mut net = RacerValueNet::new(8, 3, 2, 1, &mut rng);
        let s: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        let before = net.flat_params();
        let (_, g) = net.loss_grad(&s, 1, &[1.0, -1.0]);
        net.sgd_step(&s, 1, &[1.0, -1.0], 0.01);
        let after = net.flat_params();
        for ((b, a), g) in before.iter().zip(&after).zip(&g) {
            assert!((a - (b - 0.01 * g)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let mut rng = RandomStream::new(4);
        let m = Mlp::new(&[3, 4, 2], &mut rng);
        let x = [0.3, -0.2, 0.9];
        let out = m.output(&x);
        let (loss, g) = m.squared_loss_grad(&x, &out, None);
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }
}
