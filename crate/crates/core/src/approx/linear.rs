use serde::{Deserialize, Serialize};

use super::InitScheme;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::types::dot;

/// `K` linear outputs per action: output(s, a, k) = s . theta[a, k, :].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearValueMap {
    state_dim: usize,
    num_actions: usize,
    outputs: usize,
    init: InitScheme,
    /// Laid out [a][k][d].
    theta: Vec<f64>,
}

impl LinearValueMap {
    pub fn new(state_dim: usize, num_actions: usize, outputs: usize, init: InitScheme, rng: &mut RandomStream) -> Self {
        let n = state_dim * num_actions * outputs;
        let theta = (0..n).map(|_| init.draw(state_dim, rng)).collect();
        LinearValueMap { state_dim, num_actions, outputs, init, theta }
    }

    pub fn zeros(state_dim: usize, num_actions: usize, outputs: usize) -> Self {
        LinearValueMap {
            state_dim,
            num_actions,
            outputs,
            init: InitScheme::Zero,
            theta: vec![0.0; state_dim * num_actions * outputs],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn init_scheme(&self) -> InitScheme {
        self.init
    }

    pub fn set_init_scheme(&mut self, init: InitScheme) {
        self.init = init;
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn row(&self, a: usize, k: usize) -> &[f64] {
        let start = (a * self.outputs + k) * self.state_dim;
        &self.theta[start..start + self.state_dim]
    }

    pub fn weight(&self, d: usize, a: usize, k: usize) -> f64 {
        self.row(a, k)[d]
    }

    pub fn set_weight(&mut self, d: usize, a: usize, k: usize, v: f64) {
        let i = (a * self.outputs + k) * self.state_dim + d;
        self.theta[i] = v;
    }

    pub fn predict(&self, s: &[f64], a: usize) -> Result<Vec<f64>> {
        if s.len() != self.state_dim {
            return Err(Error::DimMismatch { expected: self.state_dim, got: s.len() });
        }
        let mut out = vec![0.0; self.outputs];
        self.predict_into(s, a, &mut out);
        Ok(out)
    }

    /// Unchecked forward pass for one action.
    pub fn predict_into(&self, s: &[f64], a: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(a, k), s);
        }
    }

    /// Outputs of every action, laid out [a][k].
    pub fn predict_all_into(&self, s: &[f64], out: &mut [f64]) {
        for (row, o) in self.theta.chunks_exact(self.state_dim).zip(out.iter_mut()) {
            *o = dot(row, s);
        }
    }

    /// One SGD step on sum_k (target_k - predict_k)^2; only action `a`'s
    /// slice changes.
    pub fn sgd_step(&mut self, s: &[f64], a: usize, target: &[f64], alpha: f64) -> Result<()> {
        if s.len() != self.state_dim {
            return Err(Error::DimMismatch { expected: self.state_dim, got: s.len() });
        }
        if target.len() != self.outputs {
            return Err(Error::DimMismatch { expected: self.outputs, got: target.len() });
        }
        if let Some(index) = target.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { index, value: target[index] });
        }
        self.sgd_step_unchecked(s, a, target, alpha);
        Ok(())
    }

    pub fn sgd_step_unchecked(&mut self, s: &[f64], a: usize, target: &[f64], alpha: f64) {
        let d = self.state_dim;
        let base = a * self.outputs * d;
        for (k, &t) in target.iter().enumerate() {
            let row = &mut self.theta[base + k * d..base + (k + 1) * d];
            let scale = 2.0 * alpha * (t - dot(row, s));
            if scale != 0.0 {
                for (w, &x) in row.iter_mut().zip(s) {
                    *w += scale * x;
                }
            }
        }
    }

    /// Squared loss and its gradient with respect to every parameter.
    pub fn loss_grad(&self, s: &[f64], a: usize, target: &[f64]) -> (f64, Vec<f64>) {
        let d = self.state_dim;
        let mut grad = vec![0.0; self.theta.len()];
        let mut loss = 0.0;
        for (k, &t) in target.iter().enumerate() {
            let start = (a * self.outputs + k) * d;
            let r = t - dot(&self.theta[start..start + d], s);
            loss += r * r;
            for (g, &x) in grad[start..start + d].iter_mut().zip(s) {
                *g = -2.0 * r * x;
            }
        }
        (loss, grad)
    }

    pub fn loss_at(&self, params: &[f64], s: &[f64], a: usize, target: &[f64]) -> f64 {
        let d = self.state_dim;
        target
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let start = (a * self.outputs + k) * d;
                (t - dot(&params[start..start + d], s)).powi(2)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_zero_output() {
        let m = LinearValueMap::zeros(4, 2, 3);
        assert_eq!(m.predict(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn unit_column() {
        let mut m = LinearValueMap::zeros(3, 1, 1);
        m.set_weight(2, 0, 0, 1.0);
        assert_eq!(m.predict(&[0.0, 0.0, 1.0], 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn single_weight_closed_form() {
        let mut m = LinearValueMap::zeros(3, 2, 1);
        m.sgd_step(&[0.0, 1.0, 0.0], 1, &[1.0], 0.5).unwrap();
        assert_eq!(m.weight(1, 1, 0), 1.0);
        assert_eq!(m.params().iter().filter(|&&w| w != 0.0).count(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = LinearValueMap::zeros(3, 2, 1);
        assert!(m.predict(&[1.0], 0).is_err());
        assert!(matches!(
            m.sgd_step(&[0.0, 1.0, 0.0], 0, &[f64::NAN], 0.1),
            Err(Error::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn step_matches_gradient() {
        let mut rng = RandomStream::new(3);
        let m = LinearValueMap::new(5, 3, 2, InitScheme::Normal { mean: 0.0, std: 0.5 }, &mut rng);
        let s: Vec<f64> = (0..5).map(|_| rng.normal(0.0, 1.0)).collect();
        let target = [0.3, -0.7];
        let (_, g) = m.loss_grad(&s, 2, &target);
        let mut stepped = m.clone();
        stepped.sgd_step(&s, 2, &target, 0.01).unwrap();
        for ((new, old), g) in stepped.params().iter().zip(m.params()).zip(&g) {
            assert!((new - (old - 0.01 * g)).abs() < 1e-14);
        }
    }
}
