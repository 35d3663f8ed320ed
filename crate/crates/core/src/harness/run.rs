//! Sequential-task training runs.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EnvKind, FeatureMode, RunConfig};
use super::format::sig9;
use crate::agents::{Agent, AgentConfig, AgentKind, ApproxSpec, FeatureSource, RewardMode};
use crate::approx::InitScheme;
use crate::envs::object::{load_layout, default_layout, ObjectCollectionEnv, Variant};
use crate::envs::racer::{RacerEnv, STATE_DIM as RACER_STATE_DIM};
use crate::envs::tabular::{TabularEnv, TabularGridworld};
use crate::envs::tasks::sample_task;
use crate::error::{Error, Result};
use crate::learnfeat::{learn_features, TransitionLog};
use crate::rng::{derive_seed, RandomStream};
use crate::types::{Environment, Hyperparams, TaskSpec};

/// Names of the independent random streams of one repetition.
pub const STREAMS: [&str; 6] = ["tasks", "env", "init", "explore", "prefit", "features"];

pub fn stream(cfg: &RunConfig, name: &str, repetition: usize) -> RandomStream {
    RandomStream::derive(cfg.seed, name, repetition as u64)
}

/// One row per (repetition, task).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub agent: String,
    pub seed: u64,
    pub repetition: usize,
    pub task_index: usize,
    pub avg_reward_per_step: f64,
    pub total_task_return: f64,
    pub cumulative_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub agent: String,
    pub repetition: usize,
    pub task_index: usize,
    pub steps: usize,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<TaskRow>,
    pub timing: Vec<TimingRow>,
}

pub const RECORD_HEADER: [&str; 7] =
    ["agent", "seed", "repetition", "task_index", "avg_reward_per_step", "total_task_return", "cumulative_return"];

impl RunRecord {
    /// Total return over all tasks of each repetition, in repetition order.
    pub fn totals(&self) -> Vec<f64> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(rep, _)| *rep == r.repetition) {
                Some((_, t)) => *t += r.total_task_return,
                None => out.push((r.repetition, r.total_task_return)),
            }
        }
        out.into_iter().map(|(_, t)| t).collect()
    }

    pub fn mean_total_return(&self) -> f64 {
        let t = self.totals();
        t.iter().sum::<f64>() / t.len().max(1) as f64
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RECORD_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.agent.clone(),
                r.seed.to_string(),
                r.repetition.to_string(),
                r.task_index.to_string(),
                sig9(r.avg_reward_per_step),
                sig9(r.total_task_return),
                sig9(r.cumulative_return),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Vec<TaskRow>> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            rows.push(rec?);
        }
        Ok(rows)
    }

    pub fn write_timing(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["agent", "repetition", "task_index", "steps", "wall_time"])?;
        for t in &self.timing {
            w.write_record([
                t.agent.clone(),
                t.repetition.to_string(),
                t.task_index.to_string(),
                t.steps.to_string(),
                sig9(t.wall_time),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Per-task step budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Steps(usize),
    Episodes(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaskStats {
    pub total: f64,
    pub steps: usize,
    pub episodes: usize,
}

/// Trains `agent` on the environment's current task. A new episode starts
/// at the beginning of the task, after every terminal transition, and when
/// `cap` steps have elapsed in an episode.
#[allow(clippy::too_many_arguments)]
pub fn train_task(
    env: &mut dyn Environment,
    agent: &mut Agent,
    budget: Budget,
    hp: &Hyperparams,
    cap: Option<usize>,
    env_rng: &mut RandomStream,
    explore_rng: &mut RandomStream,
    mut log: Option<(&mut TransitionLog, usize)>,
) -> Result<TaskStats> {
    let mut stats = TaskStats::default();
    let mut s = env.reset(env_rng);
    let mut in_episode = 0usize;
    loop {
        match budget {
            Budget::Steps(n) if stats.steps >= n => break,
            Budget::Episodes(n) if stats.episodes >= n => break,
            _ => {}
        }
        let a = agent.act(&s, hp.epsilon, explore_rng);
        let tr = env.step(a, env_rng);
        agent.update(&tr, hp)?;
        stats.total += tr.reward;
        stats.steps += 1;
        in_episode += 1;
        let end = tr.terminal || cap.is_some_and(|c| in_episode >= c);
        if let Some((log, task)) = log.as_mut() {
            log.push(*task, tr.clone());
        }
        if end {
            stats.episodes += 1;
            in_episode = 0;
            let more = match budget {
                Budget::Steps(n) => stats.steps < n,
                Budget::Episodes(n) => stats.episodes < n,
            };
            if more {
                s = env.reset(env_rng);
            }
        } else {
            s = tr.s_next;
        }
    }
    Ok(stats)
}

pub fn build_env(cfg: &RunConfig) -> Result<Box<dyn Environment>> {
    Ok(match cfg.env {
        EnvKind::Object | EnvKind::ObjectOriginal => {
            let variant = if cfg.env == EnvKind::Object { Variant::Modified } else { Variant::Original };
            let objects = match &cfg.layout_file {
                Some(p) => load_layout(p)?,
                None => default_layout(variant),
            };
            Box::new(ObjectCollectionEnv::with_layout(variant, cfg.walls, objects, cfg.rbf_sigma())?)
        }
        EnvKind::Racer => Box::new(RacerEnv::new(cfg.rbf_sigma())),
        EnvKind::Tabular => {
            let mut g = TabularGridworld::new(cfg.tabular.width, cfg.tabular.height);
            g.slip = cfg.tabular.slip;
            let model = g.model(cfg.hyperparams.gamma);
            if let Some(s) = cfg.tabular.start {
                if s >= model.num_states() {
                    return Err(Error::Config(format!("start state {s} out of range")));
                }
            }
            Box::new(TabularEnv::new(model, cfg.tabular.start))
        }
    })
}

pub fn approx_spec(cfg: &RunConfig, env: &dyn Environment) -> ApproxSpec {
    match cfg.env {
        EnvKind::Tabular => ApproxSpec::Tabular { num_states: env.state_dim(), schedule: cfg.tabular.schedule },
        EnvKind::Object | EnvKind::ObjectOriginal => {
            ApproxSpec::Linear { state_dim: env.state_dim(), init: InitScheme::SMALL_NORMAL }
        }
        EnvKind::Racer => ApproxSpec::Net { state_dim: RACER_STATE_DIM },
    }
}

fn budget(cfg: &RunConfig) -> Budget {
    if cfg.is_episodic() {
        Budget::Episodes(cfg.episodes_per_task.expect("validated"))
    } else {
        Budget::Steps(cfg.steps_per_task.expect("validated"))
    }
}

/// The task sequence of one repetition; identical for every agent.
pub fn sample_tasks(cfg: &RunConfig, repetition: usize) -> Result<Vec<TaskSpec>> {
    let env = build_env(cfg)?;
    let mut rng = stream(cfg, "tasks", repetition);
    (0..cfg.num_tasks)
        .map(|_| sample_task(cfg.reward_kind(), env.feature_set(), env.feature_dim(), &mut rng))
        .collect()
}

fn agent_config(cfg: &RunConfig, kind: AgentKind, reward_mode: RewardMode, env: &dyn Environment, feature_dim: usize) -> AgentConfig {
    AgentConfig {
        kind,
        reward_mode,
        approx: approx_spec(cfg, env),
        num_actions: env.num_actions(),
        feature_dim,
        atoms: env.feature_set().cloned(),
        prefit: cfg.prefit,
    }
}

/// Q-learning over the warm-up tasks, logging every transition, then
/// feature learning on that log.
fn learned_features(cfg: &RunConfig, tasks: &[TaskSpec], repetition: usize) -> Result<FeatureSource> {
    let FeatureMode::Learned { h, warmup_tasks, learner } = &cfg.features else {
        return Ok(FeatureSource::Env);
    };
    if *warmup_tasks > tasks.len() {
        return Err(Error::MissingWarmup(tasks.len()));
    }
    let mut env = build_env(cfg)?;
    let ql_cfg = agent_config(cfg, AgentKind::Ql, RewardMode::Given, env.as_ref(), env.feature_dim());
    let mut ql = Agent::new(
        ql_cfg,
        FeatureSource::Env,
        stream(cfg, "warmup_init", repetition),
        stream(cfg, "warmup_prefit", repetition),
    )?;
    let mut env_rng = stream(cfg, "warmup_env", repetition);
    let mut explore_rng = stream(cfg, "warmup_explore", repetition);
    let mut log = TransitionLog::new();
    for (i, task) in tasks[..*warmup_tasks].iter().enumerate() {
        env.set_task(task.clone());
        ql.begin_task(i, task)?;
        train_task(env.as_mut(), &mut ql, budget(cfg), &cfg.hyperparams, cfg.episode_cap, &mut env_rng, &mut explore_rng, Some((&mut log, i)))?;
    }
    let lc = crate::learnfeat::LearnerConfig { h: *h, ..*learner };
    let learner = learn_features(&log, *warmup_tasks, &lc, &mut stream(cfg, "features", repetition))?;
    Ok(FeatureSource::Learned(learner))
}

/// Output of one repetition.
pub struct Repetition {
    pub rows: Vec<TaskRow>,
    pub timing: Vec<TimingRow>,
    pub agent: Agent,
    pub log: Option<TransitionLog>,
}

/// Runs one repetition on an explicit task sequence with the configured
/// agent.
pub fn run_repetition(cfg: &RunConfig, repetition: usize, tasks: &[TaskSpec]) -> Result<Repetition> {
    run_repetition_as(cfg, cfg.agent, cfg.reward_mode, repetition, tasks)
}

pub fn run_repetition_as(
    cfg: &RunConfig,
    kind: AgentKind,
    reward_mode: RewardMode,
    repetition: usize,
    tasks: &[TaskSpec],
) -> Result<Repetition> {
    let features = learned_features(cfg, tasks, repetition)?;
    let mut env = build_env(cfg)?;
    let fdim = match &features {
        FeatureSource::Learned(l) => l.h(),
        FeatureSource::Env => env.feature_dim(),
    };
    let acfg = agent_config(cfg, kind, reward_mode, env.as_ref(), fdim);
    let mut agent = Agent::new(acfg, features, stream(cfg, "init", repetition), stream(cfg, "prefit", repetition))?;
    let mut env_rng = stream(cfg, "env", repetition);
    let mut explore_rng = stream(cfg, "explore", repetition);
    let mut log = cfg.log_transitions.then(TransitionLog::new);
    let mut rows = Vec::with_capacity(tasks.len());
    let mut timing = Vec::with_capacity(tasks.len());
    let mut cumulative = 0.0;
    for (i, task) in tasks.iter().enumerate() {
        let start = Instant::now();
        env.set_task(task.clone());
        agent.begin_task(i, task)?;
        let stats = train_task(
            env.as_mut(),
            &mut agent,
            budget(cfg),
            &cfg.hyperparams,
            cfg.episode_cap,
            &mut env_rng,
            &mut explore_rng,
            log.as_mut().map(|l| (l, i)),
        )?;
        cumulative += stats.total;
        rows.push(TaskRow {
            agent: kind.name().to_string(),
            seed: cfg.seed,
            repetition,
            task_index: i,
            avg_reward_per_step: stats.total / stats.steps.max(1) as f64,
            total_task_return: stats.total,
            cumulative_return: cumulative,
        });
        timing.push(TimingRow {
            agent: kind.name().to_string(),
            repetition,
            task_index: i,
            steps: stats.steps,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(Repetition { rows, timing, agent, log })
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a RunConfig,
    /// Seed of every named stream, per repetition.
    stream_seeds: Vec<serde_json::Map<String, serde_json::Value>>,
    version: &'static str,
}

/// Runs every repetition (in parallel) and writes outputs when
/// `output_dir` is set.
pub fn run(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let reps: Vec<Result<Repetition>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let tasks = sample_tasks(cfg, r)?;
            run_repetition(cfg, r, &tasks)
        })
        .collect();
    let mut record = RunRecord::default();
    let mut outputs = Vec::new();
    for rep in reps {
        let rep = rep?;
        record.rows.extend(rep.rows.iter().cloned());
        record.timing.extend(rep.timing.iter().cloned());
        outputs.push(rep);
    }
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        record.write_csv(&dir.join("records.csv"))?;
        record.write_timing(&dir.join("timing.csv"))?;
        let stream_seeds = (0..cfg.repetitions)
            .map(|r| {
                STREAMS
                    .iter()
                    .map(|n| (n.to_string(), derive_seed(cfg.seed, n, r as u64).into()))
                    .collect()
            })
            .collect();
        let meta = Meta { config: cfg, stream_seeds, version: env!("CARGO_PKG_VERSION") };
        let path = dir.join("meta.json");
        fs::write(&path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&path, e))?;
        for (r, rep) in outputs.iter().enumerate() {
            if cfg.snapshot {
                rep.agent.write_library(&dir.join(format!("library_rep{r}")))?;
            }
            if let Some(log) = &rep.log {
                log.write(&dir.join(format!("transitions_rep{r}.tsv")))?;
            }
        }
    }
    Ok(record)
}
