//! One-step feature model p(phi | s, a) shared by every task.

use serde::{Deserialize, Serialize};

use crate::approx::{SoftmaxFeatureModel, TabularFeatureModel};
use crate::types::StateVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FeatureModel {
    Tabular(TabularFeatureModel),
    Softmax(SoftmaxFeatureModel),
}

fn hot(s: &StateVec) -> usize {
    s.hot_index().expect("tabular feature model needs one-hot states")
}

impl FeatureModel {
    pub fn predict(&self, s: &StateVec, a: usize) -> Vec<f64> {
        match self {
            FeatureModel::Tabular(m) => m.probs(hot(s), a).to_vec(),
            FeatureModel::Softmax(m) => m.predict(s, a),
        }
    }

    pub fn update(&mut self, s: &StateVec, a: usize, observed: usize, beta: f64) {
        match self {
            FeatureModel::Tabular(m) => m.update(hot(s), a, observed, beta),
            FeatureModel::Softmax(m) => m.step(s, a, observed, beta),
        }
    }
}
