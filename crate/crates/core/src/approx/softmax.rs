use serde::{Deserialize, Serialize};

use super::InitScheme;
use crate::rng::RandomStream;
use crate::types::dot;

/// One-step feature model p(phi | s, a) = softmax(theta[a] s) over atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxFeatureModel {
    state_dim: usize,
    num_actions: usize,
    num_atoms: usize,
    init: InitScheme,
    /// Laid out [a][atom][d].
    theta: Vec<f64>,
}

pub fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

impl SoftmaxFeatureModel {
    pub fn new(state_dim: usize, num_actions: usize, num_atoms: usize, init: InitScheme, rng: &mut RandomStream) -> Self {
        let theta = (0..state_dim * num_actions * num_atoms).map(|_| init.draw(state_dim, rng)).collect();
        SoftmaxFeatureModel { state_dim, num_actions, num_atoms, init, theta }
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn init_scheme(&self) -> InitScheme {
        self.init
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn logits_with(&self, params: &[f64], s: &[f64], a: usize) -> Vec<f64> {
        let d = self.state_dim;
        (0..self.num_atoms)
            .map(|j| {
                let start = (a * self.num_atoms + j) * d;
                dot(&params[start..start + d], s)
            })
            .collect()
    }

    pub fn predict(&self, s: &[f64], a: usize) -> Vec<f64> {
        let mut p = self.logits_with(&self.theta, s, a);
        softmax_in_place(&mut p);
        p
    }

    pub fn loss_at(&self, params: &[f64], s: &[f64], a: usize, observed: usize) -> f64 {
        let mut p = self.logits_with(params, s, a);
        softmax_in_place(&mut p);
        p.iter().enumerate().map(|(j, &pj)| (f64::from(j == observed) - pj).powi(2)).sum()
    }

    /// dL/dlogits for L = sum_j (y_j - p_j)^2 with y the observed indicator.
    fn logit_grad(p: &[f64], observed: usize) -> Vec<f64> {
        let g: Vec<f64> = p.iter().enumerate().map(|(j, &pj)| -2.0 * (f64::from(j == observed) - pj)).collect();
        let gp: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
        p.iter().zip(&g).map(|(&pl, &gl)| pl * (gl - gp)).collect()
    }

    pub fn loss_grad(&self, s: &[f64], a: usize, observed: usize) -> (f64, Vec<f64>) {
        let p = self.predict(s, a);
        let loss = p.iter().enumerate().map(|(j, &pj)| (f64::from(j == observed) - pj).powi(2)).sum();
        let dz = Self::logit_grad(&p, observed);
        let d = self.state_dim;
        let mut grad = vec![0.0; self.theta.len()];
        for (j, &dzj) in dz.iter().enumerate() {
            let start = (a * self.num_atoms + j) * d;
            for (g, &x) in grad[start..start + d].iter_mut().zip(s) {
                *g = dzj * x;
            }
        }
        (loss, grad)
    }

    pub fn step(&mut self, s: &[f64], a: usize, observed: usize, beta: f64) {
        let p = self.predict(s, a);
        let dz = Self::logit_grad(&p, observed);
        let d = self.state_dim;
        for (j, &dzj) in dz.iter().enumerate() {
            if dzj == 0.0 {
                continue;
            }
            let start = (a * self.num_atoms + j) * d;
            for (w, &x) in self.theta[start..start + d].iter_mut().zip(s) {
                *w -= beta * dzj * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(seed: u64) -> SoftmaxFeatureModel {
        SoftmaxFeatureModel::new(6, 2, 4, InitScheme::Normal { mean: 0.0, std: 0.3 }, &mut RandomStream::new(seed))
    }

    #[test]
    fn output_is_distribution() {
        let m = model(1);
        let p = m.predict(&[1.0, 0.5, 0.0, 0.2, 0.0, 1.0], 1);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn observed_probability_rises() {
        let mut m = model(2);
        let s = [1.0, 0.5, 0.0, 0.2, 0.0, 1.0];
        let before = m.predict(&s, 0)[2];
        m.step(&s, 0, 2, 0.05);
        let after = m.predict(&s, 0);
        assert!(after[2] >= before);
        assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saturated_output_has_tiny_gradient() {
        let mut m = SoftmaxFeatureModel::new(1, 1, 3, InitScheme::Zero, &mut RandomStream::new(0));
        m.params_mut()[1] = 40.0;
        let (_, g) = m.loss_grad(&[1.0], 0, 1);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }
}
