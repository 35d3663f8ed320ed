use serde::{Deserialize, Serialize};

use super::{
    evaluate_policy, gpi_policy, psi_iteration, table_sub, tilde_norm, value_iteration_rewards, xi_iteration,
    xi_iteration_from, xi_policy_exact, bellman_sweep, Backup, Table, TabularModel, XiMode,
};
use crate::types::TaskSpec;

const DP_TOL: f64 = 1e-13;

/// Outcome of one numerical check: pass iff lhs <= rhs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub instance_seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(name: &str, instance_seed: u64, lhs: f64, rhs: f64) -> Self {
        OracleReport { name: name.into(), instance_seed, lhs, rhs, slack: rhs - lhs, pass: lhs <= rhs }
    }
}

/// max_{s,a} |psi . w - sum_phi R(phi) xi| for r = phi . w.
pub fn check_sf_xi_equivalence(model: &TabularModel, w: &[f64], tol: f64, seed: u64) -> OracleReport {
    let task = TaskSpec::Linear { w: w.to_vec() };
    let r = model.atom_rewards(&task);
    let psi = psi_iteration(model, w, DP_TOL);
    let xi = xi_iteration(model, XiMode::Optimal(&r), DP_TOL);
    let diff = psi.project(w).max_abs_diff(&xi.project(&r));
    OracleReport::new("sf_xi_equivalence", seed, diff, tol)
}

/// With indicator features, psi and xi coincide atom by atom.
pub fn check_indicator_reformulation(model: &TabularModel, atom_rewards: &[f64], tol: f64, seed: u64) -> OracleReport {
    let m = model.num_atoms();
    let indicators = crate::types::DiscreteFeatureSet::indicators(m);
    assert_eq!(model.atoms(), &indicators, "indicator reformulation needs indicator atoms");
    let psi = psi_iteration(model, atom_rewards, DP_TOL);
    let xi = xi_iteration(model, XiMode::Optimal(atom_rewards), DP_TOL);
    OracleReport::new("indicator_reformulation", seed, psi.max_abs_diff(&xi), tol)
}

/// max_{s,a} |(1 - gamma) sum_phi xi(s, a, phi) - 1| at the optimal fixed point.
pub fn check_normalization(model: &TabularModel, atom_rewards: &[f64], tol: f64, seed: u64) -> OracleReport {
    let xi = xi_iteration(model, XiMode::Optimal(atom_rewards), DP_TOL);
    let worst = (0..model.num_states())
        .flat_map(|s| (0..model.num_actions()).map(move |a| (s, a)))
        .map(|(s, a)| ((1.0 - model.gamma) * xi.at(s, a).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    OracleReport::new("normalization", seed, worst, tol)
}

/// Iterates the fixed-policy xi operator from `init` and reports the
/// largest measured ratio ||T xi_n - xi*||_~ / ||xi_n - xi*||_~ against
/// gamma + 1e-9.
///
/// Ratios are only measured while the distance exceeds 1e-5 (1 + ||xi*||_~):
/// below that, rounding in the sweep is no longer small against the
/// distance itself. An iterate already at the fixed point is reported as a
/// zero residual.
pub fn check_contraction(
    model: &TabularModel,
    atom_rewards: &[f64],
    policy: &[usize],
    init: Option<Table>,
    n_iters: usize,
    seed: u64,
) -> OracleReport {
    let fixed = xi_policy_exact(model, policy);
    let scale = 1.0 + tilde_norm(&fixed, atom_rewards);
    let floor = 1e-5 * scale;
    let immediate: Vec<Vec<f64>> = (0..model.num_atoms())
        .map(|j| (0..model.num_atoms()).map(|k| f64::from(j == k)).collect())
        .collect();
    let mut xi = init.unwrap_or_else(|| Table::zeros(model.num_states(), model.num_actions(), model.num_atoms()));
    let mut worst: f64 = 0.0;
    let mut dist = tilde_norm(&table_sub(&xi, &fixed), atom_rewards);
    for _ in 0..n_iters {
        if dist < floor {
            break;
        }
        let next = bellman_sweep(model, &xi, &immediate, &Backup::Policy(policy));
        let next_dist = tilde_norm(&table_sub(&next, &fixed), atom_rewards);
        worst = worst.max(next_dist / dist);
        xi = next;
        dist = next_dist;
    }
    OracleReport::new("contraction", seed, worst, model.gamma + 1e-9)
}

/// Contraction distances ||xi_n - xi*||_~ for n = 0..=n_iters.
pub fn contraction_trace(model: &TabularModel, atom_rewards: &[f64], policy: &[usize], init: Table, n_iters: usize) -> Vec<f64> {
    let fixed = xi_policy_exact(model, policy);
    let mut xi = init;
    let mut out = vec![tilde_norm(&table_sub(&xi, &fixed), atom_rewards)];
    for _ in 0..n_iters {
        xi = xi_iteration_from(model, XiMode::Policy(policy), xi, f64::INFINITY);
        out.push(tilde_norm(&table_sub(&xi, &fixed), atom_rewards));
    }
    out
}

/// GPI bound with exact source xi-functions:
/// ||Q* - Q^pi||_inf <= 2 / (1 - gamma) * min_i sup_{s,a} sum_phi |R - R_i|(phi) p(phi | s, a).
pub fn check_gpi_bound(model: &TabularModel, sources: &[TaskSpec], target: &TaskSpec, seed: u64) -> OracleReport {
    let r = model.atom_rewards(target);
    let source_xi: Vec<Table> = sources
        .iter()
        .map(|t| xi_iteration(model, XiMode::Optimal(&model.atom_rewards(t)), DP_TOL))
        .collect();
    let policy = gpi_policy(&source_xi, &r);
    let q_pi = evaluate_policy(model, &policy, &r);
    let q_star = value_iteration_rewards(model, &r, DP_TOL);
    let lhs = q_star.max_abs_diff(&q_pi);
    let min_gap = sources
        .iter()
        .map(|t| {
            let ri = model.atom_rewards(t);
            (0..model.num_states())
                .flat_map(|s| (0..model.num_actions()).map(move |a| (s, a)))
                .map(|(s, a)| {
                    model.feature_distribution(s, a).iter().enumerate().map(|(j, p)| (r[j] - ri[j]).abs() * p).sum::<f64>()
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    // the DP tolerance enters both Q tables; allow it on the left side
    let rhs = 2.0 / (1.0 - model.gamma) * min_gap + 1e-9;
    OracleReport::new("gpi_bound", seed, lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn random_rewards(m: usize, rng: &mut RandomStream) -> Vec<f64> {
        (0..m).map(|_| rng.uniform_range(-1.0, 1.0)).collect()
    }

    #[test]
    fn zero_weights_give_zero_q() {
        let mut rng = RandomStream::new(1);
        let m = TabularModel::random(5, 2, 3, 3, 0.9, &mut rng);
        let rep = check_sf_xi_equivalence(&m, &[0.0, 0.0, 0.0], 1e-8, 1);
        assert!(rep.pass);
        assert_eq!(rep.lhs, 0.0);
    }

    #[test]
    fn fixed_point_start_has_zero_residual() {
        let mut rng = RandomStream::new(2);
        let m = TabularModel::random(5, 2, 3, 3, 0.9, &mut rng);
        let policy = vec![0, 1, 0, 1, 1];
        let r = random_rewards(3, &mut rng);
        let fixed = xi_policy_exact(&m, &policy);
        let rep = check_contraction(&m, &r, &policy, Some(fixed), 50, 2);
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn class_members_share_distance() {
        let mut rng = RandomStream::new(3);
        let m = TabularModel::random(4, 2, 3, 2, 0.9, &mut rng);
        let policy = vec![1, 0, 0, 1];
        let r = vec![1.0, -1.0, 0.5];
        // k with sum_phi k R = 0: k = (1, 1, 0)
        let base = Table::zeros(4, 2, 3);
        let mut shifted = base.clone();
        for s in 0..4 {
            for a in 0..2 {
                shifted.at_mut(s, a)[0] += 0.7;
                shifted.at_mut(s, a)[1] += 0.7;
            }
        }
        let a = contraction_trace(&m, &r, &policy, base, 0)[0];
        let b = contraction_trace(&m, &r, &policy, shifted, 0)[0];
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn target_in_sources_is_tight() {
        let mut rng = RandomStream::new(4);
        let m = TabularModel::random(6, 3, 4, 3, 0.9, &mut rng);
        let atoms = m.atoms().clone();
        let target = TaskSpec::Tabular { atoms: atoms.clone(), rewards: random_rewards(4, &mut rng) };
        let other = TaskSpec::Tabular { atoms, rewards: random_rewards(4, &mut rng) };
        let rep = check_gpi_bound(&m, &[other, target.clone()], &target, 4);
        assert!(rep.pass);
        assert!(rep.lhs < 1e-9);
    }
}
