//! Domain types shared by environments, agents, oracles and the harness.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Dense observation vector handed to agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVec(pub Vec<f64>);

impl StateVec {
    pub fn one_hot(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        StateVec(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Index of the active entry of a one-hot state.
    pub fn hot_index(&self) -> Option<usize> {
        let mut found = None;
        for (i, &v) in self.0.iter().enumerate() {
            if v == 1.0 {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            } else if v != 0.0 {
                return None;
            }
        }
        found
    }
}

impl Deref for StateVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// Feature descriptor of a transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVec(pub Vec<f64>);

impl FeatureVec {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Deref for FeatureVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVec {
    fn from(v: Vec<f64>) -> Self {
        FeatureVec(v)
    }
}

/// Ordered, duplicate-free list of feature atoms. The order is the indexing
/// contract for every per-atom table (xi values, reward vectors, one-step
/// models) and never changes during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFeatureSet {
    atoms: Vec<FeatureVec>,
}

impl DiscreteFeatureSet {
    pub fn new(atoms: Vec<FeatureVec>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let dim = first.dim();
            if let Some(bad) = atoms.iter().find(|a| a.dim() != dim) {
                return Err(Error::DimMismatch { expected: dim, got: bad.dim() });
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i] == atoms[j] {
                    return Err(Error::DuplicateAtom(i, j));
                }
            }
        }
        Ok(DiscreteFeatureSet { atoms })
    }

    /// Indicator atoms e_0..e_{m-1}.
    pub fn indicators(m: usize) -> Self {
        let atoms = (0..m)
            .map(|j| {
                let mut v = vec![0.0; m];
                v[j] = 1.0;
                FeatureVec(v)
            })
            .collect();
        DiscreteFeatureSet { atoms }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, FeatureVec::dim)
    }

    pub fn atoms(&self) -> &[FeatureVec] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> &FeatureVec {
        &self.atoms[index]
    }

    /// Exact-equality lookup.
    pub fn index_of(&self, phi: &[f64]) -> Option<usize> {
        self.atoms.iter().position(|a| a.0.as_slice() == phi)
    }
}

/// One Gaussian preference bump of a racer reward dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianComponent {
    pub fn eval(&self, x: f64) -> f64 {
        (-(x - self.mu).powi(2) / self.sigma).exp()
    }
}

/// Reward definition over features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskSpec {
    /// r = phi . w
    Linear { w: Vec<f64> },
    /// One reward per atom of a discrete feature set.
    Tabular { atoms: DiscreteFeatureSet, rewards: Vec<f64> },
    /// r = sum_k (1/n) max_j exp(-(phi_k - mu_j)^2 / sigma_j)
    GaussianMix { dims: Vec<Vec<GaussianComponent>> },
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TaskSpec::Linear { w } => {
                if let Some(i) = w.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidTask(format!("weight {i} is not finite")));
                }
            }
            TaskSpec::Tabular { atoms, rewards } => {
                if atoms.len() != rewards.len() {
                    return Err(Error::InvalidTask(format!(
                        "{} atoms but {} rewards",
                        atoms.len(),
                        rewards.len()
                    )));
                }
                if rewards.iter().any(|r| !r.is_finite()) {
                    return Err(Error::InvalidTask("non-finite tabular reward".into()));
                }
            }
            TaskSpec::GaussianMix { dims } => {
                for (k, comps) in dims.iter().enumerate() {
                    if comps.is_empty() || comps.len() > 2 {
                        return Err(Error::InvalidTask(format!(
                            "dimension {k} has {} components (expected 1 or 2)",
                            comps.len()
                        )));
                    }
                    if comps.iter().any(|c| !(c.sigma > 0.0) || !c.mu.is_finite()) {
                        return Err(Error::InvalidTask(format!("dimension {k}: sigma must be > 0")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reward of a feature vector.
    ///
    /// Panics when a tabular task is asked about a vector that is not one of
    /// its atoms; environments only emit atoms.
    pub fn reward(&self, phi: &[f64]) -> f64 {
        match self {
            TaskSpec::Linear { w } => dot(w, phi),
            TaskSpec::Tabular { atoms, rewards } => {
                let j = atoms
                    .index_of(phi)
                    .unwrap_or_else(|| panic!("feature {phi:?} is not an atom of this task"));
                rewards[j]
            }
            TaskSpec::GaussianMix { dims } => {
                (0..dims.len()).map(|k| self.dim_reward(k, phi[k]).unwrap_or(0.0)).sum()
            }
        }
    }

    /// Per-dimension reward r_k(x) for tasks that decompose additively over
    /// feature dimensions (linear and Gaussian-mixture tasks).
    pub fn dim_reward(&self, k: usize, x: f64) -> Option<f64> {
        match self {
            TaskSpec::Linear { w } => w.get(k).map(|wk| wk * x),
            TaskSpec::GaussianMix { dims } => {
                let n = dims.len() as f64;
                dims.get(k).map(|comps| {
                    comps.iter().map(|c| c.eval(x)).fold(f64::NEG_INFINITY, f64::max) / n
                })
            }
            TaskSpec::Tabular { .. } => None,
        }
    }

    pub fn is_additive(&self) -> bool {
        !matches!(self, TaskSpec::Tabular { .. })
    }

    pub fn linear_weights(&self) -> Option<&[f64]> {
        match self {
            TaskSpec::Linear { w } => Some(w),
            _ => None,
        }
    }

    /// The same task with every reward multiplied by `factor` (linear and
    /// tabular tasks only; Gaussian mixtures are returned unchanged).
    pub fn scaled(&self, factor: f64) -> TaskSpec {
        match self {
            TaskSpec::Linear { w } => TaskSpec::Linear { w: w.iter().map(|v| v * factor).collect() },
            TaskSpec::Tabular { atoms, rewards } => TaskSpec::Tabular {
                atoms: atoms.clone(),
                rewards: rewards.iter().map(|v| v * factor).collect(),
            },
            other => other.clone(),
        }
    }
}

/// One environment step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: StateVec,
    pub a: ActionId,
    pub s_next: StateVec,
    pub phi: FeatureVec,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub epsilon: f64,
    /// Value-function rate (Q, psi, xi).
    pub alpha: f64,
    /// Reward-weight rate.
    pub alpha_w: f64,
    /// Reward-model rate.
    pub alpha_r: f64,
    /// One-step feature model rate.
    pub beta: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { gamma: 0.95, epsilon: 0.15, alpha: 0.025, alpha_w: 0.05, alpha_r: 0.05, beta: 0.2 }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidHyperparams(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidHyperparams(format!("epsilon {} not in [0, 1]", self.epsilon)));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("alpha_w", self.alpha_w),
            ("alpha_r", self.alpha_r),
            ("beta", self.beta),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidHyperparams(format!("{name} {v} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax_tiebreak(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index, value: values[index] });
    }
    Ok(greedy_index(values))
}

/// Unchecked variant of [`argmax_tiebreak`] for inner loops. NaN entries are
/// never selected unless every entry is NaN, in which case 0 is returned.
pub fn greedy_index(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The environment contract: a single-threaded state machine whose rewards
/// come from the currently installed task.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// The finite atom set, for environments with discrete features.
    fn feature_set(&self) -> Option<&DiscreteFeatureSet>;
    fn set_task(&mut self, task: TaskSpec);
    fn task(&self) -> &TaskSpec;
    fn reset(&mut self, rng: &mut RandomStream) -> StateVec;
    fn step(&mut self, a: ActionId, rng: &mut RandomStream) -> Transition;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_tiebreak(&[1.0, 3.0, 2.0]).unwrap(), 1);
        assert_eq!(argmax_tiebreak(&[2.0, 2.0]).unwrap(), 0);
        assert_eq!(argmax_tiebreak(&[-1.0]).unwrap(), 0);
    }

    #[test]
    fn argmax_errors() {
        assert!(matches!(argmax_tiebreak(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            argmax_tiebreak(&[0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(argmax_tiebreak(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn greedy_index_skips_nan() {
        assert_eq!(greedy_index(&[f64::NAN, -5.0, -1.0]), 2);
        assert_eq!(greedy_index(&[f64::NAN, f64::NAN]), 0);
    }

    #[test]
    fn feature_set_rejects_duplicates() {
        let a = FeatureVec(vec![1.0, 0.0]);
        let err = DiscreteFeatureSet::new(vec![a.clone(), FeatureVec(vec![0.0, 1.0]), a]).unwrap_err();
        assert!(matches!(err, Error::DuplicateAtom(0, 2)));
    }

    #[test]
    fn one_hot_round_trip() {
        let s = StateVec::one_hot(5, 3);
        assert_eq!(s.hot_index(), Some(3));
        assert_eq!(StateVec(vec![0.5, 0.5]).hot_index(), None);
    }

    #[test]
    fn gaussian_mix_reward() {
        let comps = |mu| vec![GaussianComponent { mu, sigma: 0.01 }];
        let task = TaskSpec::GaussianMix { dims: vec![comps(0.1), comps(0.2), comps(0.3)] };
        assert!((task.reward(&[0.1, 0.2, 0.3]) - 1.0).abs() < 1e-15);
        assert!(task.reward(&[0.9, 0.9, 0.9]) < 1e-10);

        let two = TaskSpec::GaussianMix {
            dims: vec![vec![
                GaussianComponent { mu: 0.2, sigma: 0.01 },
                GaussianComponent { mu: 0.5, sigma: 0.01 },
            ]; 3],
        };
        assert!((two.dim_reward(0, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn task_validation() {
        assert!(TaskSpec::Linear { w: vec![f64::NAN] }.validate().is_err());
        let bad = TaskSpec::GaussianMix { dims: vec![vec![GaussianComponent { mu: 0.1, sigma: 0.0 }]] };
        assert!(bad.validate().is_err());
        let three = TaskSpec::GaussianMix { dims: vec![vec![GaussianComponent { mu: 0.1, sigma: 0.01 }; 3]] };
        assert!(three.validate().is_err());
    }

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        assert!(Hyperparams { gamma: 1.0, ..Default::default() }.validate().is_err());
        assert!(Hyperparams { alpha: 0.0, ..Default::default() }.validate().is_err());
    }
}
