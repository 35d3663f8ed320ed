//! Fully enumerable MDPs: an explicit kernel with a feature atom on every
//! (s, a, s') outcome, a small gridworld built on it, and a one-hot
//! environment adapter so agents and the exact oracles share instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::types::{ActionId, DiscreteFeatureSet, Environment, StateVec, TaskSpec, Transition};

/// One possible outcome of taking an action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: usize,
    pub prob: f64,
    pub atom: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    num_states: usize,
    num_actions: usize,
    /// Indexed by s * A + a.
    outcomes: Vec<Vec<Outcome>>,
    /// Entering a terminal state ends the episode; its value is never
    /// bootstrapped.
    terminal: Vec<bool>,
    atoms: DiscreteFeatureSet,
    pub gamma: f64,
}

impl TabularModel {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        outcomes: Vec<Vec<Outcome>>,
        terminal: Vec<bool>,
        atoms: DiscreteFeatureSet,
        gamma: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || atoms.is_empty() {
            return Err(Error::EmptyInput);
        }
        if outcomes.len() != num_states * num_actions {
            return Err(Error::DimMismatch { expected: num_states * num_actions, got: outcomes.len() });
        }
        if terminal.len() != num_states {
            return Err(Error::DimMismatch { expected: num_states, got: terminal.len() });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidHyperparams(format!("gamma {gamma} not in [0, 1)")));
        }
        for (sa, row) in outcomes.iter().enumerate() {
            let mut total = 0.0;
            for o in row {
                if o.next >= num_states || o.atom >= atoms.len() || !(o.prob >= 0.0) {
                    return Err(Error::Config(format!("invalid outcome {o:?} at row {sa}")));
                }
                total += o.prob;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("kernel row {sa} sums to {total}")));
            }
        }
        Ok(TabularModel { num_states, num_actions, outcomes, terminal, atoms, gamma })
    }

    /// Random non-terminating model with indicator atoms: every (s, a) has
    /// `branching` distinct successors with exponential weights and
    /// uniformly drawn atoms.
    pub fn random(
        num_states: usize,
        num_actions: usize,
        num_atoms: usize,
        branching: usize,
        gamma: f64,
        rng: &mut RandomStream,
    ) -> Self {
        Self::random_with_atoms(num_states, num_actions, DiscreteFeatureSet::indicators(num_atoms), branching, gamma, rng)
    }

    pub fn random_with_atoms(
        num_states: usize,
        num_actions: usize,
        atoms: DiscreteFeatureSet,
        branching: usize,
        gamma: f64,
        rng: &mut RandomStream,
    ) -> Self {
        let num_atoms = atoms.len();
        let branching = branching.clamp(1, num_states);
        let mut outcomes = Vec::with_capacity(num_states * num_actions);
        for _ in 0..num_states * num_actions {
            let mut states: Vec<usize> = (0..num_states).collect();
            rng.shuffle(&mut states);
            let weights: Vec<f64> = (0..branching).map(|_| -(1.0 - rng.uniform()).ln()).collect();
            let total: f64 = weights.iter().sum();
            let mut row: Vec<Outcome> = states[..branching]
                .iter()
                .zip(&weights)
                .map(|(&next, &w)| Outcome { next, prob: w / total, atom: rng.below(num_atoms) })
                .collect();
            // absorb rounding so the row sums to one
            let err: f64 = 1.0 - row.iter().map(|o| o.prob).sum::<f64>();
            row[0].prob += err;
            outcomes.push(row);
        }
        TabularModel { num_states, num_actions, outcomes, terminal: vec![false; num_states], atoms, gamma }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &DiscreteFeatureSet {
        &self.atoms
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.num_actions + a]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        TabularModel { gamma, ..self.clone() }
    }

    /// p(phi | s, a) as a dense vector over atoms.
    pub fn feature_distribution(&self, s: usize, a: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.num_atoms()];
        for o in self.outcomes(s, a) {
            p[o.atom] += o.prob;
        }
        p
    }

    /// Expected immediate reward of (s, a) under a per-atom reward vector.
    pub fn expected_reward(&self, s: usize, a: usize, atom_rewards: &[f64]) -> f64 {
        self.outcomes(s, a).iter().map(|o| o.prob * atom_rewards[o.atom]).sum()
    }

    /// Reward of every atom under a task.
    pub fn atom_rewards(&self, task: &TaskSpec) -> Vec<f64> {
        self.atoms.atoms().iter().map(|phi| task.reward(phi)).collect()
    }

    pub fn sample(&self, s: usize, a: usize, rng: &mut RandomStream) -> Outcome {
        let row = self.outcomes(s, a);
        let u = rng.uniform();
        let mut acc = 0.0;
        for o in row {
            acc += o.prob;
            if u < acc {
                return *o;
            }
        }
        *row.last().expect("kernel rows are non-empty")
    }
}

/// Deterministic width x height gridworld with four actions
/// (0 up, 1 down, 2 left, 3 right). Moving off the grid leaves the agent in
/// place.
///
/// Atoms (indicators): 0 plain move, 1 bumped the border, 2 entered the goal
/// cell (top-right, terminal), 3 entered the pit cell.
#[derive(Clone, Debug)]
pub struct TabularGridworld {
    pub width: usize,
    pub height: usize,
    pub goal: usize,
    pub pit: usize,
    /// Probability that the move goes in a uniformly random direction.
    pub slip: f64,
}

impl TabularGridworld {
    pub const NUM_ATOMS: usize = 4;

    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        TabularGridworld { width, height, goal: n - 1, pit: n / 2 + width / 2 - 1, slip: 0.0 }
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height
    }

    fn target(&self, s: usize, dir: usize) -> (usize, bool) {
        let (x, y) = (s % self.width, s / self.width);
        let (nx, ny) = match dir {
            0 if y + 1 < self.height => (x, y + 1),
            1 if y > 0 => (x, y - 1),
            2 if x > 0 => (x - 1, y),
            3 if x + 1 < self.width => (x + 1, y),
            _ => return (s, true),
        };
        (ny * self.width + nx, false)
    }

    fn atom_of(&self, next: usize, bumped: bool) -> usize {
        if next == self.goal {
            2
        } else if next == self.pit {
            3
        } else if bumped {
            1
        } else {
            0
        }
    }

    pub fn model(&self, gamma: f64) -> TabularModel {
        let n = self.num_states();
        let mut outcomes = Vec::with_capacity(n * 4);
        for s in 0..n {
            for a in 0..4 {
                let mut row: Vec<Outcome> = Vec::new();
                for dir in 0..4 {
                    let p = if dir == a { 1.0 - self.slip + self.slip / 4.0 } else { self.slip / 4.0 };
                    if p == 0.0 {
                        continue;
                    }
                    let (next, bumped) = self.target(s, dir);
                    let atom = self.atom_of(next, bumped);
                    match row.iter_mut().find(|o| o.next == next && o.atom == atom) {
                        Some(o) => o.prob += p,
                        None => row.push(Outcome { next, prob: p, atom }),
                    }
                }
                outcomes.push(row);
            }
        }
        let mut terminal = vec![false; n];
        terminal[self.goal] = true;
        TabularModel::new(n, 4, outcomes, terminal, DiscreteFeatureSet::indicators(Self::NUM_ATOMS), gamma)
            .expect("gridworld model is well formed")
    }
}

/// One-hot environment over a [`TabularModel`].
#[derive(Clone, Debug)]
pub struct TabularEnv {
    model: TabularModel,
    /// `None` restarts uniformly over non-terminal states.
    start: Option<usize>,
    state: usize,
    task: TaskSpec,
}

impl TabularEnv {
    pub fn new(model: TabularModel, start: Option<usize>) -> Self {
        let task = TaskSpec::Tabular { atoms: model.atoms().clone(), rewards: vec![0.0; model.num_atoms()] };
        TabularEnv { model, start, state: start.unwrap_or(0), task }
    }

    pub fn model(&self) -> &TabularModel {
        &self.model
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn set_state(&mut self, s: usize) {
        self.state = s;
    }
}

impl Environment for TabularEnv {
    fn state_dim(&self) -> usize {
        self.model.num_states()
    }

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn feature_dim(&self) -> usize {
        self.model.atoms().dim()
    }

    fn feature_set(&self) -> Option<&DiscreteFeatureSet> {
        Some(self.model.atoms())
    }

    fn set_task(&mut self, task: TaskSpec) {
        self.task = task;
    }

    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn reset(&mut self, rng: &mut RandomStream) -> StateVec {
        self.state = match self.start {
            Some(s) => s,
            None => {
                let live: Vec<usize> = (0..self.model.num_states()).filter(|&s| !self.model.is_terminal(s)).collect();
                live[rng.below(live.len())]
            }
        };
        StateVec::one_hot(self.model.num_states(), self.state)
    }

    fn step(&mut self, a: ActionId, rng: &mut RandomStream) -> Transition {
        let n = self.model.num_states();
        let s = StateVec::one_hot(n, self.state);
        let o = self.model.sample(self.state, a.0, rng);
        self.state = o.next;
        let phi = self.model.atoms().atom(o.atom).clone();
        let reward = self.task.reward(&phi);
        Transition { s, a, s_next: StateVec::one_hot(n, o.next), phi, reward, terminal: self.model.is_terminal(o.next) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gridworld_rows_are_distributions() {
        let mut g = TabularGridworld::new(4, 4);
        g.slip = 0.2;
        let m = g.model(0.9);
        for s in 0..m.num_states() {
            for a in 0..4 {
                let p: f64 = m.feature_distribution(s, a).iter().sum();
                assert!((p - 1.0).abs() < 1e-12);
            }
        }
        assert!(m.is_terminal(15));
    }

    #[test]
    fn gridworld_moves() {
        let m = TabularGridworld::new(4, 4).model(0.9);
        assert_eq!(m.outcomes(0, 3)[0], Outcome { next: 1, prob: 1.0, atom: 0 });
        assert_eq!(m.outcomes(0, 1)[0], Outcome { next: 0, prob: 1.0, atom: 1 });
        assert_eq!(m.outcomes(14, 3)[0].atom, 2);
    }

    #[test]
    fn random_model_is_valid() {
        let mut rng = RandomStream::new(3);
        let m = TabularModel::random(6, 3, 4, 3, 0.9, &mut rng);
        let rebuilt = TabularModel::new(6, 3, m.outcomes.clone(), m.terminal.clone(), m.atoms.clone(), 0.9);
        assert!(rebuilt.is_ok());
    }

    #[test]
    fn reset_uses_start_state() {
        let m = TabularGridworld::new(3, 3).model(0.9);
        let mut env = TabularEnv::new(m, Some(4));
        let s = env.reset(&mut RandomStream::new(0));
        assert_eq!(s.hot_index(), Some(4));
    }

    #[test]
    fn rejects_bad_rows() {
        let atoms = DiscreteFeatureSet::indicators(1);
        let rows = vec![vec![Outcome { next: 0, prob: 0.5, atom: 0 }]];
        assert!(TabularModel::new(1, 1, rows, vec![false], atoms, 0.5).is_err());
    }
}
