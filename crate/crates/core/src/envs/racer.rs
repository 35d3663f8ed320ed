//! Torus racer: a car-like agent on the unit torus whose features are its
//! normalised distances to three fixed markers.

use std::f64::consts::PI;

use super::rbf::{self, Metric};
use crate::rng::RandomStream;
use crate::types::{ActionId, DiscreteFeatureSet, Environment, FeatureVec, GaussianComponent, StateVec, TaskSpec, Transition};

pub const MARKERS: [(f64, f64); 3] = [(0.25, 0.75), (0.75, 0.25), (0.75, 0.6)];
pub const EPISODE_LENGTH: usize = 200;
/// 100 position RBFs + 20 orientation RBFs.
pub const STATE_DIM: usize = 120;
pub const TURN: f64 = PI / 7.0;
pub const TURN_SPEED: f64 = 0.06;
pub const STRAIGHT_SPEED: f64 = 0.075;
pub const NOISE_STD: f64 = 0.005;

/// Largest distance between two points of the unit torus.
pub fn max_torus_distance() -> f64 {
    0.5f64.sqrt()
}

fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land on exactly pi after rounding
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

pub fn racer_features(pos: (f64, f64)) -> FeatureVec {
    let d_max = max_torus_distance();
    FeatureVec(MARKERS.iter().map(|&m| (rbf::torus_distance(pos, m) / d_max).min(1.0)).collect())
}

/// Reward of a Gaussian-mixture task (thin wrapper kept for symmetry with
/// the other reward kinds).
pub fn racer_reward(task: &TaskSpec, phi: &FeatureVec) -> f64 {
    task.reward(phi)
}

#[derive(Clone, Debug)]
pub struct RacerEnv {
    centers: Vec<(f64, f64)>,
    rbf_sigma: f64,
    task: TaskSpec,
    agent_pos: (f64, f64),
    theta: f64,
    step_count: usize,
}

impl RacerEnv {
    pub fn new(rbf_sigma: f64) -> Self {
        let flat = vec![GaussianComponent { mu: 0.0, sigma: 0.01 }];
        RacerEnv {
            centers: rbf::grid_centers(),
            rbf_sigma,
            task: TaskSpec::GaussianMix { dims: vec![flat; 3] },
            agent_pos: (0.5, 0.5),
            theta: 0.0,
            step_count: 0,
        }
    }

    pub fn agent_pos(&self) -> (f64, f64) {
        self.agent_pos
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn set_pose(&mut self, pos: (f64, f64), theta: f64) {
        self.agent_pos = pos;
        self.theta = theta;
    }

    pub fn encode_state(&self) -> StateVec {
        let mut v = Vec::with_capacity(STATE_DIM);
        rbf::rbf_encode_position_into(self.agent_pos, &self.centers, self.rbf_sigma, Metric::Torus, &mut v);
        rbf::rbf_encode_orientation_into(self.theta, &mut v);
        StateVec(v)
    }

    /// Noise-free kinematics of one action.
    pub fn kinematics(pos: (f64, f64), theta: f64, a: ActionId) -> ((f64, f64), f64) {
        let (theta, speed) = match a.0 {
            0 => (theta + TURN, TURN_SPEED),
            1 => (theta, STRAIGHT_SPEED),
            2 => (theta - TURN, TURN_SPEED),
            other => panic!("racer has 3 actions, got {other}"),
        };
        ((pos.0 + speed * theta.cos(), pos.1 + speed * theta.sin()), theta)
    }
}

impl Environment for RacerEnv {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn num_actions(&self) -> usize {
        3
    }

    fn feature_dim(&self) -> usize {
        MARKERS.len()
    }

    fn feature_set(&self) -> Option<&DiscreteFeatureSet> {
        None
    }

    fn set_task(&mut self, task: TaskSpec) {
        self.task = task;
    }

    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn reset(&mut self, rng: &mut RandomStream) -> StateVec {
        let x = rng.uniform();
        let y = rng.uniform();
        self.agent_pos = (x, y);
        self.theta = wrap_angle(rng.uniform_range(-PI, PI));
        self.step_count = 0;
        self.encode_state()
    }

    fn step(&mut self, a: ActionId, rng: &mut RandomStream) -> Transition {
        let s = self.encode_state();
        let (pos, theta) = Self::kinematics(self.agent_pos, self.theta, a);
        let x = (pos.0 + rng.normal(0.0, NOISE_STD)).rem_euclid(1.0);
        let y = (pos.1 + rng.normal(0.0, NOISE_STD)).rem_euclid(1.0);
        self.theta = wrap_angle(theta + rng.normal(0.0, NOISE_STD));
        self.agent_pos = (x, y);
        self.step_count += 1;
        let phi = racer_features(self.agent_pos);
        let reward = self.task.reward(&phi);
        Transition {
            s,
            a,
            s_next: self.encode_state(),
            phi,
            reward,
            terminal: self.step_count >= EPISODE_LENGTH,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_seed_deterministic() {
        let mut e = RacerEnv::new(rbf::DEFAULT_POSITION_SIGMA);
        let a = e.reset(&mut RandomStream::new(9));
        let b = e.reset(&mut RandomStream::new(9));
        assert_eq!(a, b);
        assert_eq!(a.dim(), STATE_DIM);
    }

    #[test]
    fn wraps_right_edge() {
        let mut e = RacerEnv::new(rbf::DEFAULT_POSITION_SIGMA);
        let mut rng = RandomStream::new(1);
        e.reset(&mut rng);
        e.set_pose((0.98, 0.5), 0.0);
        e.step(ActionId(1), &mut rng);
        let (x, _) = e.agent_pos();
        assert!(x < 0.1, "x = {x}");
        assert!((x - (0.98 + 0.075 - 1.0)).abs() < 0.03);
    }

    #[test]
    fn episode_lasts_200_steps() {
        let mut e = RacerEnv::new(rbf::DEFAULT_POSITION_SIGMA);
        let mut rng = RandomStream::new(2);
        e.reset(&mut rng);
        for t in 1..=EPISODE_LENGTH {
            let tr = e.step(ActionId(t % 3), &mut rng);
            assert_eq!(tr.terminal, t == EPISODE_LENGTH);
            assert!(tr.phi.iter().all(|&f| (0.0..=1.0).contains(&f)));
        }
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!(wrap_angle(PI) < PI);
        assert!((wrap_angle(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
    }
}
