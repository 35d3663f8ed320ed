//! Linear reward-weight fitting.

use std::cmp::Ordering;

use crate::rng::RandomStream;
use crate::types::{dot, DiscreteFeatureSet, TaskSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineFit {
    pub w: Vec<f64>,
    /// Mean absolute residual over the fitting points.
    pub mae: f64,
    /// Summed absolute residual over the fitting points.
    pub l1: f64,
}

fn residual_stats(points: &[(Vec<f64>, f64)], w: &[f64]) -> (f64, f64) {
    let l1: f64 = points.iter().map(|(phi, r)| (r - dot(phi, w)).abs()).sum();
    (l1 / points.len() as f64, l1)
}

fn subgradient(points: &[(Vec<f64>, f64)], w: &[f64], g: &mut [f64]) {
    g.iter_mut().for_each(|v| *v = 0.0);
    let n = points.len() as f64;
    for (phi, r) in points {
        let res = r - dot(phi, w);
        if res != 0.0 {
            let sign = res.signum() / n;
            for (gk, &x) in g.iter_mut().zip(phi) {
                *gk += sign * x;
            }
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Least-absolute-deviation fit of r ~ phi . w over every atom by
/// subgradient descent with steps eta / (k + 1); returns the best
/// iterate seen. Atoms are processed in a canonical order, so the result
/// does not depend on how the set is enumerated.
pub fn fit_weights_offline(task: &TaskSpec, atoms: &DiscreteFeatureSet, iters: usize, eta: f64) -> OfflineFit {
    let mut points: Vec<(Vec<f64>, f64)> = atoms.atoms().iter().map(|phi| (phi.0.clone(), task.reward(phi))).collect();
    points.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let dim = atoms.dim();
    let mut w = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let (mut best_mae, mut best_l1) = residual_stats(&points, &w);
    let mut best_w = w.clone();
    for k in 0..iters {
        subgradient(&points, &w, &mut g);
        let step = eta / (k + 1) as f64;
        for (wk, gk) in w.iter_mut().zip(&g) {
            *wk += step * gk;
        }
        let (mae, l1) = residual_stats(&points, &w);
        if mae < best_mae {
            best_mae = mae;
            best_l1 = l1;
            best_w.copy_from_slice(&w);
        }
    }
    OfflineFit { w: best_w, mae: best_mae, l1: best_l1 }
}

/// Sampled variant for continuous features: every iteration draws
/// `samples` uniform feature vectors from [0, 1]^dim; returns the final
/// iterate with its error on the last batch.
pub fn fit_weights_sampled(
    task: &TaskSpec,
    dim: usize,
    iters: usize,
    eta: f64,
    samples: usize,
    rng: &mut RandomStream,
) -> OfflineFit {
    let mut w = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut points: Vec<(Vec<f64>, f64)> = Vec::with_capacity(samples);
    for k in 0..iters {
        points.clear();
        for _ in 0..samples {
            let phi: Vec<f64> = (0..dim).map(|_| rng.uniform()).collect();
            let r = task.reward(&phi);
            points.push((phi, r));
        }
        subgradient(&points, &w, &mut g);
        let step = eta / (k + 1) as f64;
        for (wk, gk) in w.iter_mut().zip(&g) {
            *wk += step * gk;
        }
    }
    let (mae, l1) = if points.is_empty() { (0.0, 0.0) } else { residual_stats(&points, &w) };
    OfflineFit { w, mae, l1 }
}

/// One SGD step on (r - phi . w)^2.
pub fn fit_weights_online(w: &mut [f64], phi: &[f64], r: f64, alpha_w: f64) {
    let scale = 2.0 * alpha_w * (r - dot(phi, w));
    if scale != 0.0 {
        for (wk, &x) in w.iter_mut().zip(phi) {
            *wk += scale * x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FeatureVec;

    fn object_atoms() -> DiscreteFeatureSet {
        crate::envs::object::feature_atoms(crate::envs::object::Variant::Modified)
    }

    #[test]
    fn recovers_linear_task() {
        let w = vec![0.3, -0.6, 0.9, 0.1, 1.0];
        let fit = fit_weights_offline(&TaskSpec::Linear { w: w.clone() }, &object_atoms(), 10_000, 1.0);
        assert!(fit.mae <= 1e-3, "{fit:?}");
    }

    #[test]
    fn online_single_weight() {
        let mut w = vec![0.0; 3];
        fit_weights_online(&mut w, &[0.0, 1.0, 0.0], 1.0, 0.5);
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
        let before = w.clone();
        fit_weights_online(&mut w, &[0.0, 1.0, 0.0], 1.0, 0.5);
        assert_eq!(w, before);
    }

    #[test]
    fn constant_reward_median() {
        // atoms with a constant coordinate: the best fit is the median
        let atoms = DiscreteFeatureSet::new(vec![
            FeatureVec(vec![1.0, 0.0]),
            FeatureVec(vec![1.0, 1.0]),
            FeatureVec(vec![1.0, 2.0]),
        ])
        .unwrap();
        let task = TaskSpec::Tabular { atoms: atoms.clone(), rewards: vec![0.5, 0.5, 0.5] };
        let fit = fit_weights_offline(&task, &atoms, 10_000, 1.0);
        assert!(fit.mae < 1e-3, "{fit:?}");
    }

    #[test]
    fn sampled_fit_on_linear_racer_like_task() {
        let task = TaskSpec::Linear { w: vec![0.2, -0.4, 0.6] };
        let mut rng = RandomStream::new(3);
        let fit = fit_weights_sampled(&task, 3, 10_000, 1.0, 50, &mut rng);
        for (a, b) in fit.w.iter().zip([0.2, -0.4, 0.6]) {
            assert!((a - b).abs() < 0.02, "{fit:?}");
        }
    }
}
