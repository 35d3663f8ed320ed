//! Per-task reward models used to re-evaluate stored policies.

use serde::{Deserialize, Serialize};

use crate::approx::RewardMlp;
use crate::types::{dot, DiscreteFeatureSet, TaskSpec};

/// How a stored policy's outputs are turned into a Q-value: Q = values . projection.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputLayout {
    /// Plain Q (one output).
    Scalar,
    /// Successor features of dimension n; projection = reward weights.
    Features(usize),
    /// One output per atom; projection = reward of each atom.
    Atoms(DiscreteFeatureSet),
    /// `dims` blocks of bins; projection = r_k at each bin centre.
    Bins { dims: usize, centers: Vec<f64> },
}

impl OutputLayout {
    pub fn outputs(&self) -> usize {
        match self {
            OutputLayout::Scalar => 1,
            OutputLayout::Features(n) => *n,
            OutputLayout::Atoms(a) => a.len(),
            OutputLayout::Bins { dims, centers } => dims * centers.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardModel {
    /// The task's true reward.
    Given { task: TaskSpec },
    /// r ~ phi . w, fitted before the task or learned online.
    Linear { w: Vec<f64>, online: bool },
    /// r ~ mlp(phi), learned online.
    Mlp { net: RewardMlp },
    /// Plain Q-learning has no reward model.
    None,
}

impl RewardModel {
    pub fn reward(&self, phi: &[f64]) -> f64 {
        match self {
            RewardModel::Given { task } => task.reward(phi),
            RewardModel::Linear { w, .. } => dot(w, phi),
            RewardModel::Mlp { net } => net.predict(phi),
            RewardModel::None => 0.0,
        }
    }

    /// Per-dimension reward r_k(x), when the model is additive.
    pub fn dim_reward(&self, k: usize, x: f64) -> Option<f64> {
        match self {
            RewardModel::Given { task } => task.dim_reward(k, x),
            RewardModel::Linear { w, .. } => w.get(k).map(|wk| wk * x),
            _ => None,
        }
    }

    pub fn is_online(&self) -> bool {
        matches!(self, RewardModel::Linear { online: true, .. } | RewardModel::Mlp { .. })
    }

    /// One online step toward the observed reward; returns whether the model
    /// changed. `alpha_w` drives linear weights, `alpha_r` the network.
    pub fn observe(&mut self, phi: &[f64], r: f64, alpha_w: f64, alpha_r: f64) -> bool {
        match self {
            RewardModel::Linear { w, online: true } => {
                crate::learnfeat::fit_weights_online(w, phi, r, alpha_w);
                true
            }
            RewardModel::Mlp { net } => {
                net.step(phi, r, alpha_r);
                true
            }
            _ => false,
        }
    }

    /// Projection vector for `layout`, or None when the model cannot
    /// express it (e.g. a general reward for successor features).
    pub fn projection(&self, layout: &OutputLayout) -> Option<Vec<f64>> {
        match layout {
            OutputLayout::Scalar => Some(vec![1.0]),
            OutputLayout::Features(n) => {
                let w = match self {
                    RewardModel::Given { task } => task.linear_weights()?.to_vec(),
                    RewardModel::Linear { w, .. } => w.clone(),
                    _ => return None,
                };
                (w.len() == *n).then_some(w)
            }
            OutputLayout::Atoms(atoms) => match self {
                RewardModel::None => None,
                m => Some(atoms.atoms().iter().map(|phi| m.reward(phi)).collect()),
            },
            OutputLayout::Bins { dims, centers } => {
                let mut out = Vec::with_capacity(dims * centers.len());
                for k in 0..*dims {
                    for &x in centers {
                        out.push(self.dim_reward(k, x)?);
                    }
                }
                Some(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FeatureVec;

    #[test]
    fn atom_projection() {
        let atoms = DiscreteFeatureSet::new(vec![FeatureVec(vec![1.0, 0.0]), FeatureVec(vec![0.0, 1.0])]).unwrap();
        let m = RewardModel::Linear { w: vec![2.0, -1.0], online: false };
        assert_eq!(m.projection(&OutputLayout::Atoms(atoms)).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn general_reward_has_no_feature_projection() {
        let atoms = DiscreteFeatureSet::indicators(2);
        let m = RewardModel::Given { task: TaskSpec::Tabular { atoms, rewards: vec![0.0, 1.0] } };
        assert!(m.projection(&OutputLayout::Features(2)).is_none());
    }

    #[test]
    fn online_linear_step() {
        let mut m = RewardModel::Linear { w: vec![0.0; 3], online: true };
        assert!(m.observe(&[0.0, 1.0, 0.0], 1.0, 0.5, 0.1));
        assert_eq!(m.reward(&[0.0, 1.0, 0.0]), 1.0);
        let mut fixed = RewardModel::Linear { w: vec![0.0; 3], online: false };
        assert!(!fixed.observe(&[0.0, 1.0, 0.0], 1.0, 0.5, 0.1));
    }
}
