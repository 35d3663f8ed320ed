use serde::{Deserialize, Serialize};

/// Step-size rule for tabular stores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant,
    /// alpha * c / (c + n) where n counts earlier updates of the same (s, a).
    RobbinsMonro { c: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Constant
    }
}

/// Per (state, action) vector of `K` values with direct convex-combination
/// updates v <- v + alpha (y - v).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularValues {
    num_states: usize,
    num_actions: usize,
    outputs: usize,
    schedule: StepSchedule,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl TabularValues {
    pub fn new(num_states: usize, num_actions: usize, outputs: usize, schedule: StepSchedule) -> Self {
        TabularValues {
            num_states,
            num_actions,
            outputs,
            schedule,
            values: vec![0.0; num_states * num_actions * outputs],
            visits: vec![0; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn schedule(&self) -> StepSchedule {
        self.schedule
    }

    pub fn params(&self) -> &[f64] {
        &self.values
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn values(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.outputs;
        &self.values[start..start + self.outputs]
    }

    pub fn values_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let start = (s * self.num_actions + a) * self.outputs;
        &mut self.values[start..start + self.outputs]
    }

    /// All actions of one state, laid out [a][k].
    pub fn state_values(&self, s: usize) -> &[f64] {
        let width = self.num_actions * self.outputs;
        &self.values[s * width..(s + 1) * width]
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.num_actions + a]
    }

    pub fn set_visits(&mut self, s: usize, a: usize, n: u64) {
        self.visits[s * self.num_actions + a] = n;
    }

    /// Rate that the next update of (s, a) will use.
    pub fn rate(&self, s: usize, a: usize, alpha: f64) -> f64 {
        match self.schedule {
            StepSchedule::Constant => alpha,
            StepSchedule::RobbinsMonro { c } => alpha * c / (c + self.visits(s, a) as f64),
        }
    }

    pub fn update(&mut self, s: usize, a: usize, target: &[f64], alpha: f64) {
        let rate = self.rate(s, a, alpha);
        self.visits[s * self.num_actions + a] += 1;
        for (v, &t) in self.values_mut(s, a).iter_mut().zip(target) {
            *v += rate * (t - *v);
        }
    }
}

/// Tabular one-step feature model: p(s, a, .) moved toward the observed
/// atom's indicator with rate beta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularFeatureModel {
    num_actions: usize,
    num_atoms: usize,
    probs: Vec<f64>,
}

impl TabularFeatureModel {
    /// Starts uniform over atoms.
    pub fn new(num_states: usize, num_actions: usize, num_atoms: usize) -> Self {
        TabularFeatureModel {
            num_actions,
            num_atoms,
            probs: vec![1.0 / num_atoms as f64; num_states * num_actions * num_atoms],
        }
    }

    pub fn probs(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_atoms;
        &self.probs[start..start + self.num_atoms]
    }

    pub fn set_probs(&mut self, s: usize, a: usize, p: &[f64]) {
        let start = (s * self.num_actions + a) * self.num_atoms;
        self.probs[start..start + self.num_atoms].copy_from_slice(p);
    }

    pub fn update(&mut self, s: usize, a: usize, observed: usize, beta: f64) {
        let start = (s * self.num_actions + a) * self.num_atoms;
        for (j, p) in self.probs[start..start + self.num_atoms].iter_mut().enumerate() {
            if j == observed {
                *p += beta * (1.0 - *p);
            } else {
                *p -= beta * *p;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_update() {
        let mut t = TabularValues::new(2, 2, 2, StepSchedule::Constant);
        t.values_mut(1, 0).copy_from_slice(&[0.5, 0.5]);
        t.update(1, 0, &[1.0 + 0.95 * 2.0, 0.95 * 2.0], 0.1);
        assert!((t.values(1, 0)[0] - 0.74).abs() < 1e-12);
        assert!((t.values(1, 0)[1] - 0.64).abs() < 1e-12);
    }

    #[test]
    fn robbins_monro_decays() {
        let mut t = TabularValues::new(1, 1, 1, StepSchedule::RobbinsMonro { c: 1000.0 });
        assert_eq!(t.rate(0, 0, 1.0), 1.0);
        t.update(0, 0, &[3.0], 1.0);
        assert_eq!(t.values(0, 0)[0], 3.0);
        assert!((t.rate(0, 0, 1.0) - 1000.0 / 1001.0).abs() < 1e-15);
    }

    #[test]
    fn feature_model_updates() {
        let mut m = TabularFeatureModel::new(1, 1, 2);
        m.update(0, 0, 0, 0.2);
        assert!((m.probs(0, 0)[0] - 0.6).abs() < 1e-12);
        assert!((m.probs(0, 0)[1] - 0.4).abs() < 1e-12);
        m.update(0, 0, 1, 1.0);
        assert_eq!(m.probs(0, 0), &[0.0, 1.0]);
    }
}
