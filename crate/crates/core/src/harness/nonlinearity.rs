//! Return ratios of SFQL and QL against Xi as a function of how far the
//! task rewards are from linear in the features.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::format::sig9;
use super::run::{build_env, run_repetition_as, stream};
use crate::agents::{AgentKind, RewardMode};
use crate::envs::tasks::sample_task_at_nonlinearity;
use crate::error::{Error, Result};
use crate::types::{Hyperparams, TaskSpec};

pub const BUCKET_WIDTH: f64 = 0.25;
pub const MAX_BUCKETS: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Base run: object environment, general rewards.
    pub run: RunConfig,
    /// 3 (lowest, middle, highest range) or 7 (every range).
    #[serde(default = "seven")]
    pub buckets: usize,
    #[serde(default = "fit_iters")]
    pub fit_iters: usize,
    #[serde(default = "max_attempts")]
    pub max_attempts: usize,
    /// Per-agent rates; the run's hyperparameters when absent.
    #[serde(default)]
    pub sfql: Option<Hyperparams>,
    #[serde(default)]
    pub xi: Option<Hyperparams>,
    #[serde(default)]
    pub ql: Option<Hyperparams>,
}

fn seven() -> usize {
    MAX_BUCKETS
}

fn fit_iters() -> usize {
    10_000
}

fn max_attempts() -> usize {
    100_000
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.run.validate()?;
        bucket_indices(cfg.buckets)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Which of the seven error ranges a study with `n` buckets uses.
pub fn bucket_indices(n: usize) -> Result<Vec<usize>> {
    match n {
        7 => Ok((0..7).collect()),
        3 => Ok(vec![0, 3, 6]),
        _ => Err(Error::Config(format!("buckets must be 3 or 7, got {n}"))),
    }
}

pub fn bucket_range(b: usize) -> (f64, f64) {
    (b as f64 * BUCKET_WIDTH, (b + 1) as f64 * BUCKET_WIDTH)
}

pub fn bucket_mean(b: usize) -> f64 {
    (b as f64 + 0.5) * BUCKET_WIDTH
}

/// a / b, the ratio reported for one bucket.
pub fn ratio(a: f64, b: f64) -> f64 {
    a / b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub lo: f64,
    pub hi: f64,
    pub mean_error: f64,
    pub sfql_total: f64,
    pub xi_total: f64,
    pub ql_total: f64,
    pub sfql_xi_ratio: f64,
    pub ql_xi_ratio: f64,
}

/// Task sequence of one (bucket, repetition).
pub fn bucket_tasks(study: &StudyConfig, bucket: usize, repetition: usize) -> Result<Vec<TaskSpec>> {
    let env = build_env(&study.run)?;
    let atoms = env.feature_set().ok_or_else(|| Error::Config("the study needs discrete features".into()))?;
    let mut rng = stream(&study.run, &format!("tasks_bucket{bucket}"), repetition);
    (0..study.run.num_tasks)
        .map(|_| sample_task_at_nonlinearity(bucket_range(bucket), atoms, study.fit_iters, study.max_attempts, &mut rng))
        .collect()
}

fn mean_total(study: &StudyConfig, kind: AgentKind, mode: RewardMode, hp: Option<Hyperparams>, bucket: usize) -> Result<f64> {
    let mut cfg = study.run.clone();
    cfg.agent = kind;
    cfg.reward_mode = mode;
    if let Some(hp) = hp {
        cfg.hyperparams = hp;
    }
    let totals: Vec<Result<f64>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let tasks = bucket_tasks(study, bucket, r)?;
            let rep = run_repetition_as(&cfg, kind, mode, r, &tasks)?;
            Ok(rep.rows.iter().map(|row| row.total_task_return).sum())
        })
        .collect();
    let totals: Vec<f64> = totals.into_iter().collect::<Result<_>>()?;
    Ok(totals.iter().sum::<f64>() / totals.len() as f64)
}

pub fn nonlinearity_study(study: &StudyConfig) -> Result<Vec<BucketRow>> {
    let mut rows = Vec::new();
    for b in bucket_indices(study.buckets)? {
        let sfql = mean_total(study, AgentKind::Sfql, RewardMode::PrefitLinear, study.sfql, b)?;
        let xi = mean_total(study, AgentKind::Xi, RewardMode::Given, study.xi, b)?;
        let ql = mean_total(study, AgentKind::Ql, RewardMode::Given, study.ql, b)?;
        let (lo, hi) = bucket_range(b);
        rows.push(BucketRow {
            lo,
            hi,
            mean_error: bucket_mean(b),
            sfql_total: sfql,
            xi_total: xi,
            ql_total: ql,
            sfql_xi_ratio: ratio(sfql, xi),
            ql_xi_ratio: ratio(ql, xi),
        });
    }
    if let Some(dir) = &study.run.output_dir {
        write_table(&dir.join("nonlinearity.csv"), &rows)?;
    }
    Ok(rows)
}

pub fn write_table(path: &Path, rows: &[BucketRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lo", "hi", "mean_error", "sfql_total", "xi_total", "ql_total", "sfql_xi_ratio", "ql_xi_ratio"])?;
    for r in rows {
        w.write_record(
            [r.lo, r.hi, r.mean_error, r.sfql_total, r.xi_total, r.ql_total, r.sfql_xi_ratio, r.ql_xi_ratio].map(sig9),
        )?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_means() {
        let means: Vec<f64> = bucket_indices(7).unwrap().into_iter().map(bucket_mean).collect();
        assert_eq!(means, vec![0.125, 0.375, 0.625, 0.875, 1.125, 1.375, 1.625]);
        let three: Vec<f64> = bucket_indices(3).unwrap().into_iter().map(bucket_mean).collect();
        assert_eq!(three, vec![0.125, 0.875, 1.625]);
        assert!(bucket_indices(4).is_err());
    }

    #[test]
    fn self_ratio_is_one() {
        assert_eq!(ratio(123.5, 123.5), 1.0);
    }
}
