//! Exact dynamic programming over enumerable models and numerical checks of
//! the identities that connect Q-values, successor features and xi-functions.

mod checks;
pub mod suites;

pub use checks::{
    check_contraction, check_gpi_bound, check_indicator_reformulation, check_normalization, check_sf_xi_equivalence,
    contraction_trace, OracleReport,
};
pub use crate::envs::tabular::TabularModel;

use nalgebra::DMatrix;

use crate::types::{greedy_index, TaskSpec};

/// Values indexed by (s, a, k), k in 0..width (width 1 for Q-tables).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub num_states: usize,
    pub num_actions: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl Table {
    pub fn zeros(num_states: usize, num_actions: usize, width: usize) -> Self {
        Table { num_states, num_actions, width, values: vec![0.0; num_states * num_actions * width] }
    }

    pub fn at(&self, s: usize, a: usize) -> &[f64] {
        let i = (s * self.num_actions + a) * self.width;
        &self.values[i..i + self.width]
    }

    pub fn at_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let i = (s * self.num_actions + a) * self.width;
        &mut self.values[i..i + self.width]
    }

    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.at(s, a)[0]
    }

    /// Q-table obtained by weighting every (s, a) row with `weights`.
    pub fn project(&self, weights: &[f64]) -> Table {
        let mut out = Table::zeros(self.num_states, self.num_actions, 1);
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                out.at_mut(s, a)[0] = self.at(s, a).iter().zip(weights).map(|(x, w)| x * w).sum();
            }
        }
        out
    }

    pub fn greedy_policy(&self) -> Vec<usize> {
        assert_eq!(self.width, 1, "greedy policy needs a Q-table");
        (0..self.num_states)
            .map(|s| {
                let row: Vec<f64> = (0..self.num_actions).map(|a| self.q(s, a)).collect();
                greedy_index(&row)
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn greedy_under(table: &Table, s: usize, weights: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for a in 0..table.num_actions {
        let v: f64 = table.at(s, a).iter().zip(weights).map(|(x, w)| x * w).sum();
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

/// Which next action the backup bootstraps from.
#[derive(Clone, Debug)]
pub enum Backup<'a> {
    /// Greedy with respect to the table itself under per-output weights.
    Greedy(&'a [f64]),
    /// Fixed deterministic policy.
    Policy(&'a [usize]),
}

/// One application of the generic Bellman operator
/// T X(s, a) = sum_o p_o (imm(o) + gamma X(s'_o, a'(s'_o))),
/// where imm(o) is the row `immediate[atom]`.
pub fn bellman_sweep(model: &TabularModel, table: &Table, immediate: &[Vec<f64>], backup: &Backup) -> Table {
    let gamma = model.gamma;
    let next_action: Vec<usize> = (0..model.num_states())
        .map(|s| match backup {
            Backup::Greedy(w) => greedy_under(table, s, w),
            Backup::Policy(p) => p[s],
        })
        .collect();
    let mut out = Table::zeros(table.num_states, table.num_actions, table.width);
    for s in 0..model.num_states() {
        for a in 0..model.num_actions() {
            let row = out.at_mut(s, a);
            for o in model.outcomes(s, a) {
                let imm = &immediate[o.atom];
                let cont = !model.is_terminal(o.next);
                let next = table.at(o.next, next_action[o.next]);
                for k in 0..row.len() {
                    let boot = if cont { gamma * next[k] } else { 0.0 };
                    row[k] += o.prob * (imm[k] + boot);
                }
            }
        }
    }
    out
}

fn iterate(model: &TabularModel, init: Table, immediate: &[Vec<f64>], backup: &Backup, tol: f64) -> Table {
    let mut table = init;
    // the sup-norm error shrinks by gamma per sweep; the cap only guards
    // against a tolerance below rounding level
    for _ in 0..100_000 {
        let next = bellman_sweep(model, &table, immediate, backup);
        let residual = next.max_abs_diff(&table);
        table = next;
        if residual <= tol * (1.0 - model.gamma) {
            break;
        }
    }
    table
}

/// Q* by value iteration.
pub fn value_iteration(model: &TabularModel, reward: &TaskSpec, tol: f64) -> Table {
    let r = model.atom_rewards(reward);
    value_iteration_rewards(model, &r, tol)
}

pub fn value_iteration_rewards(model: &TabularModel, atom_rewards: &[f64], tol: f64) -> Table {
    let immediate: Vec<Vec<f64>> = atom_rewards.iter().map(|&r| vec![r]).collect();
    let init = Table::zeros(model.num_states(), model.num_actions(), 1);
    iterate(model, init, &immediate, &Backup::Greedy(&[1.0]), tol)
}

/// Value-iteration sup-norm residuals, one per sweep.
pub fn value_iteration_residuals(model: &TabularModel, atom_rewards: &[f64], sweeps: usize) -> Vec<f64> {
    let immediate: Vec<Vec<f64>> = atom_rewards.iter().map(|&r| vec![r]).collect();
    let mut table = Table::zeros(model.num_states(), model.num_actions(), 1);
    (0..sweeps)
        .map(|_| {
            let next = bellman_sweep(model, &table, &immediate, &Backup::Greedy(&[1.0]));
            let r = next.max_abs_diff(&table);
            table = next;
            r
        })
        .collect()
}

fn indicator_rows(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|j| {
            let mut v = vec![0.0; m];
            v[j] = 1.0;
            v
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum XiMode<'a> {
    /// Greedy next action with respect to sum_phi R(phi) xi under these
    /// per-atom rewards.
    Optimal(&'a [f64]),
    Policy(&'a [usize]),
}

/// Fixed point of the xi Bellman operator, starting from zero.
pub fn xi_iteration(model: &TabularModel, mode: XiMode, tol: f64) -> Table {
    let init = Table::zeros(model.num_states(), model.num_actions(), model.num_atoms());
    xi_iteration_from(model, mode, init, tol)
}

pub fn xi_iteration_from(model: &TabularModel, mode: XiMode, init: Table, tol: f64) -> Table {
    let immediate = indicator_rows(model.num_atoms());
    let backup = match mode {
        XiMode::Optimal(r) => Backup::Greedy(r),
        XiMode::Policy(p) => Backup::Policy(p),
    };
    iterate(model, init, &immediate, &backup, tol)
}

/// Successor features for linear rewards r = phi . w, greedy with respect
/// to psi . w.
pub fn psi_iteration(model: &TabularModel, w: &[f64], tol: f64) -> Table {
    let immediate: Vec<Vec<f64>> = model.atoms().atoms().iter().map(|phi| phi.0.clone()).collect();
    let init = Table::zeros(model.num_states(), model.num_actions(), model.atoms().dim());
    iterate(model, init, &immediate, &Backup::Greedy(w), tol)
}

/// Solves (I - gamma P_pi) X = B where B has one column per entry of the
/// immediate rows.
fn solve_policy(model: &TabularModel, policy: &[usize], immediate: &[Vec<f64>]) -> Table {
    let (ns, na) = (model.num_states(), model.num_actions());
    let n = ns * na;
    let width = immediate[0].len();
    let mut lhs = DMatrix::<f64>::identity(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, width);
    for s in 0..ns {
        for a in 0..na {
            let row = s * na + a;
            for o in model.outcomes(s, a) {
                for k in 0..width {
                    rhs[(row, k)] += o.prob * immediate[o.atom][k];
                }
                if !model.is_terminal(o.next) {
                    lhs[(row, o.next * na + policy[o.next])] -= model.gamma * o.prob;
                }
            }
        }
    }
    let sol = lhs.lu().solve(&rhs).expect("I - gamma P is invertible for gamma < 1");
    let mut out = Table::zeros(ns, na, width);
    for row in 0..n {
        for k in 0..width {
            out.values[row * width + k] = sol[(row, k)];
        }
    }
    out
}

/// Exact Q^pi under per-atom rewards via a linear solve.
pub fn evaluate_policy(model: &TabularModel, policy: &[usize], atom_rewards: &[f64]) -> Table {
    let immediate: Vec<Vec<f64>> = atom_rewards.iter().map(|&r| vec![r]).collect();
    solve_policy(model, policy, &immediate)
}

/// Exact xi^pi via a linear solve.
pub fn xi_policy_exact(model: &TabularModel, policy: &[usize]) -> Table {
    solve_policy(model, policy, &indicator_rows(model.num_atoms()))
}

/// Model-based xi: the immediate term is a supplied per-(s, a) feature
/// distribution instead of the kernel's.
pub fn xi_iteration_with_model(
    model: &TabularModel,
    feature_probs: &dyn Fn(usize, usize) -> Vec<f64>,
    atom_rewards: &[f64],
    tol: f64,
) -> Table {
    let (ns, na, m) = (model.num_states(), model.num_actions(), model.num_atoms());
    let gamma = model.gamma;
    let probs: Vec<Vec<f64>> = (0..ns).flat_map(|s| (0..na).map(move |a| (s, a))).map(|(s, a)| feature_probs(s, a)).collect();
    let mut table = Table::zeros(ns, na, m);
    for _ in 0..100_000 {
        let next_action: Vec<usize> = (0..ns).map(|s| greedy_under(&table, s, atom_rewards)).collect();
        let mut out = Table::zeros(ns, na, m);
        for s in 0..ns {
            for a in 0..na {
                let row = out.at_mut(s, a);
                row.copy_from_slice(&probs[s * na + a]);
                for o in model.outcomes(s, a) {
                    if model.is_terminal(o.next) {
                        continue;
                    }
                    let next = table.at(o.next, next_action[o.next]);
                    for k in 0..m {
                        row[k] += gamma * o.prob * next[k];
                    }
                }
            }
        }
        let residual = out.max_abs_diff(&table);
        table = out;
        if residual <= tol * (1.0 - gamma) {
            break;
        }
    }
    table
}

/// ||x||_~ = sup_{s,a} |sum_phi R(phi) x(s, a, phi)|
pub fn tilde_norm(table: &Table, atom_rewards: &[f64]) -> f64 {
    (0..table.num_states)
        .flat_map(|s| (0..table.num_actions).map(move |a| (s, a)))
        .map(|(s, a)| table.at(s, a).iter().zip(atom_rewards).map(|(x, r)| x * r).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

pub fn table_sub(a: &Table, b: &Table) -> Table {
    Table {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
        ..a.clone()
    }
}

/// Policy acting greedily over all source xi tables evaluated under the
/// target rewards: argmax_a max_i sum_phi R(phi) xi_i(s, a, phi).
/// Ties go to the lowest source index, then the lowest action.
pub fn gpi_policy(sources: &[Table], atom_rewards: &[f64]) -> Vec<usize> {
    let ns = sources[0].num_states;
    let na = sources[0].num_actions;
    (0..ns)
        .map(|s| {
            let mut best = (f64::NEG_INFINITY, 0);
            for xi in sources {
                for a in 0..na {
                    let q: f64 = xi.at(s, a).iter().zip(atom_rewards).map(|(x, r)| x * r).sum();
                    if q > best.0 {
                        best = (q, a);
                    }
                }
            }
            best.1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::tabular::Outcome;
    use crate::rng::RandomStream;
    use crate::types::DiscreteFeatureSet;

    fn chain(gamma: f64) -> TabularModel {
        // s0 -> s1 with atom 0, s1 -> s1 with atom 1
        let outcomes = vec![
            vec![Outcome { next: 1, prob: 1.0, atom: 0 }],
            vec![Outcome { next: 1, prob: 1.0, atom: 1 }],
        ];
        TabularModel::new(2, 1, outcomes, vec![false, false], DiscreteFeatureSet::indicators(2), gamma).unwrap()
    }

    #[test]
    fn absorbing_state_geometric_series() {
        let outcomes = vec![vec![Outcome { next: 0, prob: 1.0, atom: 0 }]];
        let m = TabularModel::new(1, 1, outcomes, vec![false], DiscreteFeatureSet::indicators(1), 0.95).unwrap();
        let q = value_iteration_rewards(&m, &[1.0], 1e-12);
        assert!((q.q(0, 0) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn terminal_transition_is_reward() {
        let outcomes = vec![vec![Outcome { next: 1, prob: 1.0, atom: 0 }], vec![Outcome { next: 1, prob: 1.0, atom: 0 }]];
        let m = TabularModel::new(2, 1, outcomes, vec![false, true], DiscreteFeatureSet::indicators(1), 0.9).unwrap();
        let q = value_iteration_rewards(&m, &[0.7], 1e-12);
        assert!((q.q(0, 0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn two_state_chain() {
        let q = value_iteration_rewards(&chain(0.5), &[0.0, 1.0], 1e-12);
        assert!((q.q(0, 0) - 1.0).abs() < 1e-10);
        assert!((q.q(1, 0) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn xi_at_gamma_zero_is_one_step_distribution() {
        let mut rng = RandomStream::new(1);
        let m = TabularModel::random(4, 2, 3, 3, 0.0, &mut rng);
        let xi = xi_iteration(&m, XiMode::Optimal(&[0.1, 0.5, -1.0]), 1e-12);
        for s in 0..4 {
            for a in 0..2 {
                let p = m.feature_distribution(s, a);
                for (x, y) in xi.at(s, a).iter().zip(&p) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn induced_q_matches_value_iteration() {
        let mut rng = RandomStream::new(2);
        let m = TabularModel::random(6, 3, 4, 3, 0.9, &mut rng);
        let r = [0.3, -0.2, 1.0, 0.0];
        let xi = xi_iteration(&m, XiMode::Optimal(&r), 1e-12);
        let q = value_iteration_rewards(&m, &r, 1e-12);
        assert!(xi.project(&r).max_abs_diff(&q) < 1e-8);
    }

    #[test]
    fn exact_evaluation_matches_iteration() {
        let mut rng = RandomStream::new(3);
        let m = TabularModel::random(5, 2, 3, 2, 0.8, &mut rng);
        let policy = vec![0, 1, 1, 0, 1];
        let xi_it = xi_iteration(&m, XiMode::Policy(&policy), 1e-13);
        let xi_ex = xi_policy_exact(&m, &policy);
        assert!(xi_it.max_abs_diff(&xi_ex) < 1e-10);
    }

    #[test]
    fn residuals_shrink() {
        let mut rng = RandomStream::new(4);
        let m = TabularModel::random(6, 3, 4, 3, 0.9, &mut rng);
        let res = value_iteration_residuals(&m, &[1.0, -0.5, 0.2, 0.0], 60);
        for w in res[1..].windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
