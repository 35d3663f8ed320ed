#![allow(dead_code)]

use xilearn::agents::{Agent, AgentConfig, AgentKind, ApproxSpec, FeatureSource, PrefitSpec, RewardMode};
use xilearn::approx::{StepSchedule, ValueStore};
use xilearn::envs::tabular::{TabularEnv, TabularGridworld, TabularModel};
use xilearn::{DiscreteFeatureSet, Environment, Hyperparams, RandomStream, TaskSpec};

pub fn tabular_agent(kind: AgentKind, num_states: usize, num_actions: usize, atoms: &DiscreteFeatureSet, schedule: StepSchedule) -> Agent {
    let cfg = AgentConfig {
        kind,
        reward_mode: RewardMode::Given,
        approx: ApproxSpec::Tabular { num_states, schedule },
        num_actions,
        feature_dim: atoms.dim(),
        atoms: Some(atoms.clone()),
        prefit: PrefitSpec::default(),
    };
    Agent::new(cfg, FeatureSource::Env, RandomStream::new(1), RandomStream::new(2)).unwrap()
}

pub fn table(agent: &Agent, k: usize) -> &xilearn::approx::TabularValues {
    match &agent.library().entry(k).values {
        ValueStore::Tabular(t) => t,
        _ => panic!("tabular store expected"),
    }
}

pub fn table_mut(agent: &mut Agent, k: usize) -> &mut xilearn::approx::TabularValues {
    match &mut agent.library_mut().entry_mut(k).values {
        ValueStore::Tabular(t) => t,
        _ => panic!("tabular store expected"),
    }
}

/// Runs `steps` environment steps, restarting after terminal transitions.
pub fn train(agent: &mut Agent, env: &mut TabularEnv, steps: usize, hp: &Hyperparams, rng: &mut RandomStream) {
    let mut s = env.reset(rng);
    for _ in 0..steps {
        let a = agent.act(&s, hp.epsilon, rng);
        let tr = env.step(a, rng);
        agent.update(&tr, hp).unwrap();
        s = if tr.terminal { env.reset(rng) } else { tr.s_next };
    }
}

/// Deterministic 4x4 gridworld, gamma 0.9, with atom rewards for plain
/// move, bump, goal and pit.
pub fn gridworld() -> (TabularModel, TaskSpec) {
    let model = TabularGridworld::new(4, 4).model(0.9);
    let task = TaskSpec::Tabular { atoms: model.atoms().clone(), rewards: vec![-0.05, -0.2, 1.0, -1.0] };
    (model, task)
}

pub fn live_states(model: &TabularModel) -> Vec<usize> {
    (0..model.num_states()).filter(|&s| !model.is_terminal(s)).collect()
}
