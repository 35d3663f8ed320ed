//! Learning-rate grid search.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EnvKind, FeatureMode, RunConfig};
use super::format::sig9;
use super::run::{run, RunRecord};
use crate::agents::{AgentKind, RewardMode};
use crate::error::{Error, Result};
use crate::types::Hyperparams;

/// Values to try per rate; absent entries keep the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub alpha: Option<Vec<f64>>,
    pub alpha_w: Option<Vec<f64>>,
    pub alpha_r: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
}

const OBJECT_ALPHA: [f64; 3] = [0.0025, 0.005, 0.025];
const RACER_ALPHA: [f64; 4] = [0.0025, 0.005, 0.025, 0.5];
const REWARD_RATES: [f64; 3] = [0.025, 0.05, 0.075];
const BETA: [f64; 3] = [0.2, 0.4, 0.6];

impl Grid {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The standard grid for an agent: alpha always, the reward-model rate
    /// when rewards are learned online, beta for the model-based agent.
    pub fn standard(cfg: &RunConfig) -> Self {
        let alpha = if cfg.env == EnvKind::Racer { RACER_ALPHA.to_vec() } else { OBJECT_ALPHA.to_vec() };
        let online = cfg.reward_mode == RewardMode::Online || matches!(cfg.features, FeatureMode::Learned { .. });
        let mut g = Grid { alpha: Some(alpha), ..Default::default() };
        match cfg.agent {
            AgentKind::Ql => {}
            AgentKind::Sfql | AgentKind::CXi if online => g.alpha_w = Some(REWARD_RATES.to_vec()),
            AgentKind::Xi | AgentKind::MbXi if online => g.alpha_r = Some(REWARD_RATES.to_vec()),
            _ => {}
        }
        if cfg.agent == AgentKind::MbXi {
            g.beta = Some(BETA.to_vec());
        }
        g
    }

    /// Cartesian product in the order alpha, alpha_w, alpha_r, beta (last
    /// varies fastest).
    pub fn cells(&self, base: &Hyperparams) -> Vec<Hyperparams> {
        let list = |v: &Option<Vec<f64>>, d: f64| v.clone().filter(|l| !l.is_empty()).unwrap_or_else(|| vec![d]);
        let mut out = Vec::new();
        for &alpha in &list(&self.alpha, base.alpha) {
            for &alpha_w in &list(&self.alpha_w, base.alpha_w) {
                for &alpha_r in &list(&self.alpha_r, base.alpha_r) {
                    for &beta in &list(&self.beta, base.beta) {
                        out.push(Hyperparams { alpha, alpha_w, alpha_r, beta, ..*base });
                    }
                }
            }
        }
        out
    }
}

pub struct Cell {
    pub hyperparams: Hyperparams,
    pub record: RunRecord,
    pub mean_total_return: f64,
}

pub struct SweepResult {
    pub cells: Vec<Cell>,
    pub best: usize,
}

impl SweepResult {
    pub fn best_cell(&self) -> &Cell {
        &self.cells[self.best]
    }
}

/// Index of the highest score; ties go to the lowest index.
pub fn pick_best(scores: &[f64]) -> usize {
    crate::types::greedy_index(scores)
}

/// Runs every cell (in parallel) on the base configuration's seeds; the
/// winner has the highest mean total return over repetitions.
pub fn sweep(base: &RunConfig, grid: &Grid) -> Result<SweepResult> {
    base.validate()?;
    let cells = grid.cells(&base.hyperparams);
    let results: Vec<Result<Cell>> = cells
        .par_iter()
        .enumerate()
        .map(|(k, hp)| {
            let mut cfg = base.clone();
            cfg.hyperparams = *hp;
            cfg.output_dir = base.output_dir.as_ref().map(|d| d.join(format!("cell_{k}")));
            let record = run(&cfg)?;
            let mean_total_return = record.mean_total_return();
            Ok(Cell { hyperparams: *hp, record, mean_total_return })
        })
        .collect();
    let cells: Vec<Cell> = results.into_iter().collect::<Result<_>>()?;
    let scores: Vec<f64> = cells.iter().map(|c| c.mean_total_return).collect();
    let best = pick_best(&scores);
    let result = SweepResult { cells, best };
    if let Some(dir) = &base.output_dir {
        write_summary(dir, base, &result)?;
    }
    Ok(result)
}

fn write_summary(dir: &Path, base: &RunConfig, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["cell", "alpha", "alpha_w", "alpha_r", "beta", "mean_total_return", "best"])?;
    for (k, c) in result.cells.iter().enumerate() {
        let hp = &c.hyperparams;
        w.write_record([
            k.to_string(),
            sig9(hp.alpha),
            sig9(hp.alpha_w),
            sig9(hp.alpha_r),
            sig9(hp.beta),
            sig9(c.mean_total_return),
            u8::from(k == result.best).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let mut best = base.clone();
    best.hyperparams = result.best_cell().hyperparams;
    best.output_dir = None;
    let path = dir.join("best.toml");
    fs::write(&path, best.to_toml()).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(agent: &str, extra: &str) -> RunConfig {
        RunConfig::from_toml(&format!(
            "env = \"object\"\nagent = \"{agent}\"\nnum_tasks = 1\nsteps_per_task = 10\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn standard_grid_sizes() {
        let n = |c: &RunConfig| Grid::standard(c).cells(&c.hyperparams).len();
        assert_eq!(n(&cfg("Xi", "")), 3);
        assert_eq!(n(&cfg("QL", "")), 3);
        assert_eq!(n(&cfg("SFQL", "reward_mode = \"online\"")), 9);
        assert_eq!(n(&cfg("Xi", "reward_mode = \"online\"")), 9);
        assert_eq!(n(&cfg("MBXi", "")), 9);
        assert_eq!(n(&cfg("MBXi", "reward_mode = \"online\"")), 27);
    }

    #[test]
    fn single_value_grid() {
        let g = Grid { alpha: Some(vec![0.1]), ..Default::default() };
        let cells = g.cells(&Hyperparams::default());
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].alpha, 0.1);
        assert_eq!(pick_best(&[3.0]), 0);
        assert_eq!(pick_best(&[1.0, 3.0, 3.0]), 1);
    }
}
