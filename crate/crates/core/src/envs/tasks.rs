//! Task samplers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learnfeat::fit_weights_offline;
use crate::rng::RandomStream;
use crate::types::{DiscreteFeatureSet, GaussianComponent, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// r = phi . w with the goal weight fixed to 1.
    Linear,
    /// An independent reward per feature atom.
    General,
    /// Per-dimension Gaussian mixtures over marker distances.
    Racer,
}

pub const MU_RANGE: (f64, f64) = (0.0, 0.7);
pub const SIGMA_RANGE: (f64, f64) = (0.001, 0.01);

/// Draw one task.
///
/// `atoms` is the discrete feature set for `Linear` and `General` tasks; the
/// first atom must be the "nothing happened" atom and the last one the goal.
/// `Racer` tasks use `feature_dim` dimensions and ignore `atoms`.
pub fn sample_task(kind: RewardKind, atoms: Option<&DiscreteFeatureSet>, feature_dim: usize, rng: &mut RandomStream) -> Result<TaskSpec> {
    match kind {
        RewardKind::Linear => {
            let n = atoms.map_or(feature_dim, DiscreteFeatureSet::dim);
            if n == 0 {
                return Err(Error::EmptyInput);
            }
            let mut w: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            w[n - 1] = 1.0;
            Ok(TaskSpec::Linear { w })
        }
        RewardKind::General => {
            let atoms = atoms.ok_or_else(|| Error::Config("general rewards need a discrete feature set".into()))?;
            let m = atoms.len();
            if m < 2 {
                return Err(Error::InvalidTask("general rewards need at least two atoms".into()));
            }
            let mut rewards: Vec<f64> = (0..m).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            rewards[0] = 0.0;
            rewards[m - 1] = 1.0;
            Ok(TaskSpec::Tabular { atoms: atoms.clone(), rewards })
        }
        RewardKind::Racer => {
            let dims = (0..feature_dim)
                .map(|_| {
                    let m = 1 + rng.below(2);
                    (0..m)
                        .map(|_| GaussianComponent {
                            mu: rng.uniform_range(MU_RANGE.0, MU_RANGE.1),
                            sigma: rng.uniform_range(SIGMA_RANGE.0, SIGMA_RANGE.1),
                        })
                        .collect()
                })
                .collect();
            Ok(TaskSpec::GaussianMix { dims })
        }
    }
}

/// Nonlinearity of a general task: the summed absolute residual over all
/// atoms of the best linear fit.
pub fn linear_fit_error(task: &TaskSpec, atoms: &DiscreteFeatureSet, iters: usize, eta: f64) -> f64 {
    fit_weights_offline(task, atoms, iters, eta).l1
}

/// Rejection-sample general tasks until one's linear-fit error lies in
/// `[lo, hi]`.
pub fn sample_task_at_nonlinearity(
    range: (f64, f64),
    atoms: &DiscreteFeatureSet,
    fit_iters: usize,
    max_attempts: usize,
    rng: &mut RandomStream,
) -> Result<TaskSpec> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty nonlinearity range [{lo}, {hi}]")));
    }
    for _ in 0..max_attempts {
        let task = sample_task(RewardKind::General, Some(atoms), atoms.dim(), rng)?;
        let err = linear_fit_error(&task, atoms, fit_iters, 1.0);
        if (lo..=hi).contains(&err) {
            return Ok(task);
        }
    }
    Err(Error::SamplingBudget { lo, hi, attempts: max_attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::object::{feature_atoms, Variant};

    #[test]
    fn linear_goal_weight_is_one() {
        let atoms = feature_atoms(Variant::Modified);
        let mut rng = RandomStream::new(4);
        for _ in 0..20 {
            let t = sample_task(RewardKind::Linear, Some(&atoms), 5, &mut rng).unwrap();
            let w = t.linear_weights().unwrap();
            assert_eq!(w[4], 1.0);
            assert!(w[..4].iter().all(|v| (-1.0..1.0).contains(v)));
        }
    }

    #[test]
    fn general_pins_nothing_and_goal() {
        let atoms = feature_atoms(Variant::Modified);
        let t = sample_task(RewardKind::General, Some(&atoms), 5, &mut RandomStream::new(5)).unwrap();
        assert_eq!(t.reward(&[0.0; 5]), 0.0);
        assert_eq!(t.reward(&[0.0, 0.0, 0.0, 0.0, 1.0]), 1.0);
    }

    #[test]
    fn racer_ranges() {
        let mut rng = RandomStream::new(6);
        for _ in 0..50 {
            let t = sample_task(RewardKind::Racer, None, 3, &mut rng).unwrap();
            t.validate().unwrap();
            let TaskSpec::GaussianMix { dims } = t else { panic!() };
            assert_eq!(dims.len(), 3);
            for c in dims.iter().flatten() {
                assert!((0.0..=0.7).contains(&c.mu));
                assert!((0.001..=0.01).contains(&c.sigma));
            }
        }
    }

    #[test]
    fn same_stream_same_tasks() {
        let atoms = feature_atoms(Variant::Modified);
        let a = sample_task(RewardKind::General, Some(&atoms), 5, &mut RandomStream::new(8)).unwrap();
        let b = sample_task(RewardKind::General, Some(&atoms), 5, &mut RandomStream::new(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bucket_sampling() {
        let atoms = feature_atoms(Variant::Modified);
        let mut rng = RandomStream::new(7);
        let t = sample_task_at_nonlinearity((1.5, 1.75), &atoms, 2000, 500, &mut rng).unwrap();
        let e = linear_fit_error(&t, &atoms, 2000, 1.0);
        assert!((1.5..=1.75).contains(&e));
        let err = sample_task_at_nonlinearity((10.0, 11.0), &atoms, 50, 3, &mut rng).unwrap_err();
        assert!(matches!(err, Error::SamplingBudget { .. }));
    }
}
