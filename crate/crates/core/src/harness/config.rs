//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, PrefitSpec, RewardMode};
use crate::approx::StepSchedule;
use crate::envs::object::WallLayout;
use crate::envs::rbf::DEFAULT_POSITION_SIGMA;
use crate::envs::tasks::RewardKind;
use crate::error::{Error, Result};
use crate::learnfeat::LearnerConfig;
use crate::types::Hyperparams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Object,
    ObjectOriginal,
    Racer,
    Tabular,
}

/// Features handed to the agent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Given,
    /// Learned from a Q-learning log of the first `warmup_tasks` tasks.
    Learned {
        h: usize,
        warmup_tasks: usize,
        #[serde(default)]
        learner: LearnerConfig,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularConfig {
    pub width: usize,
    pub height: usize,
    pub slip: f64,
    /// Fixed start state; random non-terminal restarts when absent.
    pub start: Option<usize>,
    pub schedule: StepSchedule,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig { width: 4, height: 4, slip: 0.0, start: None, schedule: StepSchedule::Constant }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvKind,
    pub agent: AgentKind,
    #[serde(default)]
    pub reward_mode: RewardMode,
    /// Task family; defaults to linear for object envs, racer for the racer
    /// and general for tabular worlds.
    #[serde(default)]
    pub reward_kind: Option<RewardKind>,
    #[serde(default)]
    pub features: FeatureMode,
    pub num_tasks: usize,
    #[serde(default)]
    pub steps_per_task: Option<usize>,
    #[serde(default)]
    pub episodes_per_task: Option<usize>,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Optional step cap per episode (object env; off by default).
    #[serde(default)]
    pub episode_cap: Option<usize>,
    #[serde(default)]
    pub rbf_sigma: Option<f64>,
    #[serde(default)]
    pub layout_file: Option<PathBuf>,
    #[serde(default)]
    pub walls: WallLayout,
    #[serde(default)]
    pub tabular: TabularConfig,
    #[serde(default)]
    pub prefit: PrefitSpec,
    /// Write the policy library after each repetition.
    #[serde(default)]
    pub snapshot: bool,
    /// Write every transition of the run to a log file.
    #[serde(default)]
    pub log_transitions: bool,
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative paths in the file are relative to the file
        if let Some(dir) = path.parent() {
            if let Some(f) = &cfg.layout_file {
                if f.is_relative() {
                    cfg.layout_file = Some(dir.join(f));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward_kind.unwrap_or(match self.env {
            EnvKind::Object | EnvKind::ObjectOriginal => RewardKind::Linear,
            EnvKind::Racer => RewardKind::Racer,
            EnvKind::Tabular => RewardKind::General,
        })
    }

    pub fn rbf_sigma(&self) -> f64 {
        self.rbf_sigma.unwrap_or(DEFAULT_POSITION_SIGMA)
    }

    pub fn is_episodic(&self) -> bool {
        self.env == EnvKind::Racer
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.hyperparams.validate()?;
        if self.num_tasks == 0 {
            return bad("num_tasks must be positive".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive".into());
        }
        match (self.is_episodic(), self.steps_per_task, self.episodes_per_task) {
            (true, _, None) | (true, _, Some(0)) => return bad("racer runs need episodes_per_task > 0".into()),
            (false, None, _) | (false, Some(0), _) => return bad("this environment needs steps_per_task > 0".into()),
            _ => {}
        }
        let kind = self.reward_kind();
        match (self.env, kind) {
            (EnvKind::Racer, RewardKind::Racer) => {}
            (EnvKind::Racer, _) => return bad("racer tasks use reward_kind = racer".into()),
            (_, RewardKind::Racer) => return bad("reward_kind = racer needs the racer environment".into()),
            _ => {}
        }
        let learned = matches!(self.features, FeatureMode::Learned { .. });
        match self.agent {
            AgentKind::Ql => {}
            AgentKind::Sfql => {
                let linear_task = kind == RewardKind::Linear;
                if self.reward_mode == RewardMode::Given && !linear_task {
                    return bad("SFQL needs a linear reward model: use reward_mode = prefit_linear or online".into());
                }
            }
            AgentKind::Xi | AgentKind::MbXi => {
                if self.env == EnvKind::Racer || learned {
                    return bad(format!("{} needs discrete features", self.agent));
                }
                if self.reward_mode == RewardMode::PrefitLinear {
                    return bad(format!("{} takes the reward as given or learns it online", self.agent));
                }
            }
            AgentKind::CXi => {
                if self.env != EnvKind::Racer && !learned {
                    return bad("CXi needs continuous features (racer or learned)".into());
                }
                if self.reward_mode == RewardMode::PrefitLinear && learned {
                    return bad("learned features need reward_mode = online".into());
                }
            }
        }
        if let FeatureMode::Learned { h, warmup_tasks, .. } = &self.features {
            if self.agent.is_successor() && self.reward_mode != RewardMode::Online {
                return bad("learned features need reward_mode = online".into());
            }
            if *h == 0 || *warmup_tasks == 0 {
                return bad("learned features need h > 0 and warmup_tasks > 0".into());
            }
            if self.env == EnvKind::Tabular {
                return bad("learned features are not supported on tabular worlds".into());
            }
        }
        if self.env == EnvKind::Tabular && (self.tabular.width == 0 || self.tabular.height == 0) {
            return bad("tabular world needs positive width and height".into());
        }
        if self.snapshot && self.output_dir.is_none() {
            return bad("snapshot = true needs output_dir".into());
        }
        if self.log_transitions && self.output_dir.is_none() {
            return bad("log_transitions = true needs output_dir".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
env = "object"
agent = "Xi"
num_tasks = 2
steps_per_task = 100
seed = 3
"#;

    #[test]
    fn parses_minimal() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.agent, AgentKind::Xi);
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.hyperparams, Hyperparams::default());
        assert_eq!(cfg.reward_kind(), RewardKind::Linear);
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_incompatible() {
        let sfql_general = BASE.replace("\"Xi\"", "\"SFQL\"") + "reward_kind = \"general\"\n";
        assert!(RunConfig::from_toml(&sfql_general).is_err());
        let ok = sfql_general + "reward_mode = \"prefit_linear\"\n";
        assert!(RunConfig::from_toml(&ok).is_ok());
        let xi_racer = BASE.replace("\"object\"", "\"racer\"").replace("steps_per_task", "episodes_per_task");
        assert!(RunConfig::from_toml(&xi_racer).is_err());
        assert!(RunConfig::from_toml(&BASE.replace("\"Xi\"", "\"CXi\"")).is_err());
        assert!(RunConfig::from_toml(&(BASE.to_string() + "bogus = 1\n")).is_err());
    }
}
