//! One agent type covering Q-learning, SFQL and the xi-learning variants.
//!
//! Every variant stores, per task, a value store mapping (s, a) to K outputs
//! and turns them into Q-values with a projection vector derived from the
//! task's reward model. The variants differ only in the output layout, the
//! immediate term of the TD target, and whether a new task copies the
//! previous parameters (successor agents) or starts fresh (Q-learning).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cxi::{bin_centers, cxi_encode_into, BINS, DELTA};
use super::library::{LibraryEntry, PolicyLibrary};
use super::model::FeatureModel;
use super::reward::{OutputLayout, RewardModel};
use crate::approx::{
    InitScheme, LinearValueMap, RacerValueNet, RewardMlp, SoftmaxFeatureModel, StepSchedule, TabularFeatureModel,
    TabularValues, ValueStore,
};
use crate::error::{Error, Result};
use crate::learnfeat::{fit_weights_offline, fit_weights_sampled, FeatureLearner};
use crate::rng::RandomStream;
use crate::types::{ActionId, DiscreteFeatureSet, Hyperparams, StateVec, TaskSpec, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "QL")]
    Ql,
    #[serde(rename = "SFQL")]
    Sfql,
    #[serde(rename = "Xi")]
    Xi,
    #[serde(rename = "MBXi")]
    MbXi,
    #[serde(rename = "CXi")]
    CXi,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [AgentKind::Ql, AgentKind::Sfql, AgentKind::Xi, AgentKind::MbXi, AgentKind::CXi];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ql => "QL",
            AgentKind::Sfql => "SFQL",
            AgentKind::Xi => "Xi",
            AgentKind::MbXi => "MBXi",
            AgentKind::CXi => "CXi",
        }
    }

    pub fn is_successor(self) -> bool {
        self != AgentKind::Ql
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown agent {s}")))
    }
}

/// Where the per-task reward model comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// The true task reward.
    #[default]
    Given,
    /// Linear weights fitted to the task before it starts.
    PrefitLinear,
    /// Learned from observed rewards while the task runs.
    Online,
}

/// Storage used for each value function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ApproxSpec {
    Tabular { num_states: usize, schedule: StepSchedule },
    Linear { state_dim: usize, init: InitScheme },
    Net { state_dim: usize },
}

/// Settings of the pre-task linear fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefitSpec {
    pub iters: usize,
    pub eta: f64,
    /// Samples per iteration when features are continuous.
    pub samples: usize,
}

impl Default for PrefitSpec {
    fn default() -> Self {
        PrefitSpec { iters: 10_000, eta: 1.0, samples: 50 }
    }
}

/// How transition features reach the agent.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureSource {
    /// The environment's own features.
    Env,
    /// sigmoid(concat(s, s') H) from a trained learner.
    Learned(FeatureLearner),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub reward_mode: RewardMode,
    pub approx: ApproxSpec,
    pub num_actions: usize,
    /// Dimension of the features the agent sees.
    pub feature_dim: usize,
    /// Atom set of the environment, when features are discrete.
    pub atoms: Option<DiscreteFeatureSet>,
    pub prefit: PrefitSpec,
}

#[derive(Clone, Debug)]
pub struct Agent {
    kind: AgentKind,
    reward_mode: RewardMode,
    approx: ApproxSpec,
    num_actions: usize,
    feature_dim: usize,
    layout: OutputLayout,
    atoms: Option<DiscreteFeatureSet>,
    prefit: PrefitSpec,
    features: FeatureSource,
    model: Option<FeatureModel>,
    library: PolicyLibrary,
    current: usize,
    last_c: usize,
    init_rng: RandomStream,
    prefit_rng: RandomStream,
    centers: Vec<f64>,
    buf: Vec<f64>,
    q: Vec<f64>,
    u: Vec<f64>,
    next: Vec<f64>,
}

impl Agent {
    /// `init_rng` draws parameter initialisations, `prefit_rng` the samples of
    /// continuous pre-task fits.
    pub fn new(cfg: AgentConfig, features: FeatureSource, mut init_rng: RandomStream, prefit_rng: RandomStream) -> Result<Self> {
        let learned = matches!(features, FeatureSource::Learned(_));
        if let FeatureSource::Learned(l) = &features {
            if l.h() != cfg.feature_dim {
                return Err(Error::Config(format!("learned features have {} dims, agent expects {}", l.h(), cfg.feature_dim)));
            }
        }
        let layout = match cfg.kind {
            AgentKind::Ql => OutputLayout::Scalar,
            AgentKind::Sfql => OutputLayout::Features(cfg.feature_dim),
            AgentKind::Xi | AgentKind::MbXi => {
                if learned {
                    return Err(Error::Config(format!("{} needs discrete features; use CXi with learned features", cfg.kind)));
                }
                let atoms = cfg
                    .atoms
                    .clone()
                    .ok_or_else(|| Error::Config(format!("{} needs an environment with discrete features", cfg.kind)))?;
                OutputLayout::Atoms(atoms)
            }
            AgentKind::CXi => OutputLayout::Bins { dims: cfg.feature_dim, centers: bin_centers() },
        };
        if learned && cfg.kind.is_successor() && cfg.reward_mode != RewardMode::Online {
            return Err(Error::Config("learned features need reward_mode = online".into()));
        }
        let model = match (cfg.kind, &layout, cfg.approx) {
            (AgentKind::MbXi, OutputLayout::Atoms(atoms), ApproxSpec::Tabular { num_states, .. }) => {
                Some(FeatureModel::Tabular(TabularFeatureModel::new(num_states, cfg.num_actions, atoms.len())))
            }
            (AgentKind::MbXi, OutputLayout::Atoms(atoms), ApproxSpec::Linear { state_dim, init }) => Some(
                FeatureModel::Softmax(SoftmaxFeatureModel::new(state_dim, cfg.num_actions, atoms.len(), init, &mut init_rng)),
            ),
            (AgentKind::MbXi, _, _) => return Err(Error::Config("MBXi needs tabular or linear storage".into())),
            _ => None,
        };
        let k = layout.outputs();
        Ok(Agent {
            kind: cfg.kind,
            reward_mode: cfg.reward_mode,
            approx: cfg.approx,
            num_actions: cfg.num_actions,
            feature_dim: cfg.feature_dim,
            layout,
            atoms: cfg.atoms,
            prefit: cfg.prefit,
            features,
            model,
            library: PolicyLibrary::new(),
            current: 0,
            last_c: 0,
            init_rng,
            prefit_rng,
            centers: bin_centers(),
            buf: Vec::new(),
            q: Vec::new(),
            u: vec![0.0; k],
            next: vec![0.0; k],
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn layout(&self) -> &OutputLayout {
        &self.layout
    }

    pub fn library(&self) -> &PolicyLibrary {
        &self.library
    }

    pub fn library_mut(&mut self) -> &mut PolicyLibrary {
        &mut self.library
    }

    pub fn feature_model(&self) -> Option<&FeatureModel> {
        self.model.as_ref()
    }

    pub fn feature_model_mut(&mut self) -> Option<&mut FeatureModel> {
        self.model.as_mut()
    }

    /// Index of the active task's entry.
    pub fn current(&self) -> usize {
        self.current
    }

    /// Source policy chosen by the last call to [`Agent::act`].
    pub fn last_source(&self) -> usize {
        self.last_c
    }

    fn fresh_store(&mut self) -> ValueStore {
        let na = self.num_actions;
        let k = self.layout.outputs();
        match self.approx {
            ApproxSpec::Tabular { num_states, schedule } => ValueStore::Tabular(TabularValues::new(num_states, na, k, schedule)),
            ApproxSpec::Linear { state_dim, init } => {
                ValueStore::Linear(LinearValueMap::new(state_dim, na, k, init, &mut self.init_rng))
            }
            ApproxSpec::Net { state_dim } => {
                let (subnets, heads) = match &self.layout {
                    OutputLayout::Scalar => (1, 1),
                    OutputLayout::Features(n) => (*n, 1),
                    OutputLayout::Atoms(a) => (1, a.len()),
                    OutputLayout::Bins { dims, centers } => (*dims, centers.len()),
                };
                ValueStore::Net(RacerValueNet::new(state_dim, na, subnets, heads, &mut self.init_rng))
            }
        }
    }

    fn reward_model_for(&mut self, task: &TaskSpec) -> Result<RewardModel> {
        if self.kind == AgentKind::Ql {
            return Ok(RewardModel::None);
        }
        Ok(match self.reward_mode {
            RewardMode::Given => RewardModel::Given { task: task.clone() },
            RewardMode::PrefitLinear => {
                let w = match &self.atoms {
                    Some(atoms) => fit_weights_offline(task, atoms, self.prefit.iters, self.prefit.eta).w,
                    None => {
                        let p = self.prefit;
                        fit_weights_sampled(task, self.feature_dim, p.iters, p.eta, p.samples, &mut self.prefit_rng).w
                    }
                };
                RewardModel::Linear { w, online: false }
            }
            RewardMode::Online => match self.kind {
                AgentKind::Xi | AgentKind::MbXi => RewardModel::Mlp { net: RewardMlp::new(self.feature_dim, &mut self.init_rng) },
                _ => {
                    let init = InitScheme::SMALL_NORMAL;
                    let w = (0..self.feature_dim).map(|_| init.draw(self.feature_dim, &mut self.init_rng)).collect();
                    RewardModel::Linear { w, online: true }
                }
            },
        })
    }

    /// Starts task `index`: builds its reward model and appends a library
    /// entry (fresh parameters for Q-learning and the first task, a copy of
    /// the previous entry otherwise).
    pub fn begin_task(&mut self, index: usize, task: &TaskSpec) -> Result<()> {
        if index != self.library.len() {
            return Err(Error::Config(format!("task {index} started but library holds {} entries", self.library.len())));
        }
        let reward = self.reward_model_for(task)?;
        let projection = reward.projection(&self.layout).ok_or_else(|| {
            Error::Config(format!("{} with reward_mode {:?} cannot represent this task's reward", self.kind, self.reward_mode))
        })?;
        let values = match self.library.last() {
            Some(prev) if self.kind.is_successor() => prev.values.clone(),
            _ => self.fresh_store(),
        };
        self.library.push(LibraryEntry { values, reward, projection });
        self.current = index;
        self.last_c = index;
        Ok(())
    }

    fn gpi_from(&self) -> usize {
        if self.kind.is_successor() {
            0
        } else {
            self.current
        }
    }

    /// Greedy (action, source policy) at `s` under the active task's reward.
    pub fn greedy(&mut self, s: &StateVec) -> (ActionId, usize) {
        let from = self.gpi_from();
        let i = self.current;
        let (a, c) = self.library.gpi(s, &self.library.entry(i).projection, from, &mut self.buf, &mut self.q);
        (ActionId(a), c)
    }

    /// Q-values of every action of the active entry alone.
    pub fn q_values(&mut self, s: &StateVec) -> Vec<f64> {
        let i = self.current;
        self.library.q_values_into(i, s, &self.library.entry(i).projection, &mut self.buf, &mut self.q);
        self.q.clone()
    }

    /// Epsilon-greedy action; remembers the GPI source for the next update.
    pub fn act(&mut self, s: &StateVec, epsilon: f64, rng: &mut RandomStream) -> ActionId {
        let (a, c) = self.greedy(s);
        self.last_c = c;
        if rng.uniform() < epsilon {
            ActionId(rng.below(self.num_actions))
        } else {
            a
        }
    }

    fn greedy_of(&mut self, k: usize, s: &StateVec) -> usize {
        self.library.q_values_into(k, s, &self.library.entry(k).projection, &mut self.buf, &mut self.q);
        crate::types::greedy_index(&self.q)
    }

    fn atom_index(&self, phi: &[f64]) -> Result<usize> {
        let atoms = self.atoms.as_ref().expect("atom layouts carry atoms");
        atoms.index_of(phi).ok_or_else(|| Error::UnknownAtom(phi.to_vec()))
    }

    /// Learning step for the transition produced by the last action.
    pub fn update(&mut self, tr: &Transition, hp: &Hyperparams) -> Result<()> {
        let i = self.current;
        let phi: Vec<f64> = match &self.features {
            FeatureSource::Env => tr.phi.0.clone(),
            FeatureSource::Learned(l) => l.features(&tr.s, &tr.s_next),
        };
        let a = tr.a.0;

        {
            let entry = self.library.entry_mut(i);
            if entry.reward.observe(&phi, tr.reward, hp.alpha_w, hp.alpha_r) {
                entry.projection = entry.reward.projection(&self.layout).expect("online models project");
            }
        }

        match self.kind {
            AgentKind::Ql => self.u[0] = tr.reward,
            AgentKind::Sfql => self.u.copy_from_slice(&phi),
            AgentKind::Xi => {
                let j = self.atom_index(&phi)?;
                self.u.iter_mut().for_each(|v| *v = 0.0);
                self.u[j] = 1.0;
            }
            AgentKind::MbXi => {
                let j = self.atom_index(&phi)?;
                let model = self.model.as_mut().expect("MBXi has a model");
                model.update(&tr.s, a, j, hp.beta);
                self.u.copy_from_slice(&model.predict(&tr.s, a));
            }
            AgentKind::CXi => {
                for (k, &x) in phi.iter().enumerate() {
                    cxi_encode_into(x, &self.centers, DELTA, &mut self.u[k * BINS..(k + 1) * BINS]);
                }
            }
        }

        let gamma_t = if tr.terminal { 0.0 } else { hp.gamma };
        self.td_update(i, tr, gamma_t, hp.alpha);
        let c = self.last_c;
        if self.kind.is_successor() && c != i && c < self.library.len() {
            self.td_update(c, tr, gamma_t, hp.alpha);
        }
        Ok(())
    }

    /// Moves entry `k` toward u + gamma_t * xi_k(s', a_bar). For the active
    /// task a_bar is the GPI action under its reward; for a secondary source
    /// it is that source's own greedy action under its own reward.
    fn td_update(&mut self, k: usize, tr: &Transition, gamma_t: f64, alpha: f64) {
        let mut target = std::mem::take(&mut self.next);
        target.copy_from_slice(&self.u);
        if gamma_t != 0.0 {
            let a_bar = if k == self.current {
                let from = self.gpi_from();
                self.library.gpi(&tr.s_next, &self.library.entry(k).projection, from, &mut self.buf, &mut self.q).0
            } else {
                self.greedy_of(k, &tr.s_next)
            };
            let store = &self.library.entry(k).values;
            let width = store.outputs();
            self.buf.resize(width, 0.0);
            store.predict_into(&tr.s_next, a_bar, &mut self.buf[..width]);
            for (t, &v) in target.iter_mut().zip(&self.buf[..width]) {
                *t += gamma_t * v;
            }
        }
        self.library.entry_mut(k).values.update(&tr.s, tr.a.0, &target, alpha);
        self.next = target;
    }

    /// Writes the policy library (one snapshot per task and a manifest).
    pub fn write_library(&self, dir: &Path) -> Result<()> {
        self.library.write(dir, self.kind.name(), self.init_rng.seed())
    }
}
