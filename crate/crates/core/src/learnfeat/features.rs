//! Multi-task feature learning: features sigmoid(concat(s, s') H) shared by
//! every task, each task with its own linear read-out, fitted jointly with
//! Adam on the squared reward error.

use serde::{Deserialize, Serialize};

use super::log::TransitionLog;
use crate::approx::{Snapshot, SnapshotHeader};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub h: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub init_std: f64,
    /// Fraction of zero-reward transitions kept in the training set.
    pub zero_keep: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            h: 4,
            iterations: 50_000,
            batch_size: 128,
            lr: 0.003,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            init_std: 0.05,
            zero_keep: 0.25,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One training example: concatenated input, task index, reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub task: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLearner {
    input_dim: usize,
    h: usize,
    num_tasks: usize,
    /// H laid out [input][h], followed by w_0 .. w_{T-1}.
    params: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    seed: u64,
}

impl FeatureLearner {
    pub fn new(input_dim: usize, h: usize, num_tasks: usize, init_std: f64, rng: &mut RandomStream) -> Self {
        let n = input_dim * h + num_tasks * h;
        let seed = rng.seed();
        let params = (0..n).map(|_| rng.normal(0.0, init_std)).collect();
        FeatureLearner { input_dim, h, num_tasks, params, m: vec![0.0; n], v: vec![0.0; n], t: 0, seed }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn task_weights(&self, task: usize) -> &[f64] {
        let start = self.input_dim * self.h + task * self.h;
        &self.params[start..start + self.h]
    }

    fn features_with(&self, params: &[f64], input: &[f64]) -> Vec<f64> {
        let h = self.h;
        let mut z = vec![0.0; h];
        for (i, &c) in input.iter().enumerate() {
            if c != 0.0 {
                for (zj, &hij) in z.iter_mut().zip(&params[i * h..(i + 1) * h]) {
                    *zj += c * hij;
                }
            }
        }
        z.into_iter().map(sigmoid).collect()
    }

    pub fn features_of_input(&self, input: &[f64]) -> Vec<f64> {
        self.features_with(&self.params, input)
    }

    /// Learned feature of a transition, strictly inside (0, 1)^h.
    pub fn features(&self, s: &[f64], s_next: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(s.len() + s_next.len());
        input.extend_from_slice(s);
        input.extend_from_slice(s_next);
        self.features_of_input(&input)
    }

    pub fn predict(&self, input: &[f64], task: usize) -> f64 {
        self.features_of_input(input).iter().zip(self.task_weights(task)).map(|(f, w)| f * w).sum()
    }

    /// Mean squared error over `batch` under explicit parameters.
    pub fn loss_at(&self, params: &[f64], batch: &[Sample]) -> f64 {
        let wo = self.input_dim * self.h;
        batch
            .iter()
            .map(|smp| {
                let f = self.features_with(params, &smp.input);
                let w = &params[wo + smp.task * self.h..wo + (smp.task + 1) * self.h];
                let pred: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
                (pred - smp.reward).powi(2)
            })
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Mean squared error over `batch` and its gradient.
    pub fn loss_grad(&self, batch: &[Sample]) -> (f64, Vec<f64>) {
        let h = self.h;
        let wo = self.input_dim * h;
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut dz = vec![0.0; h];
        for smp in batch {
            let f = self.features_of_input(&smp.input);
            let w = &self.params[wo + smp.task * h..wo + (smp.task + 1) * h];
            let pred: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
            let e = pred - smp.reward;
            loss += e * e / n;
            let scale = 2.0 * e / n;
            for j in 0..h {
                grad[wo + smp.task * h + j] += scale * f[j];
                dz[j] = scale * w[j] * f[j] * (1.0 - f[j]);
            }
            for (i, &c) in smp.input.iter().enumerate() {
                if c != 0.0 {
                    for (g, &d) in grad[i * h..(i + 1) * h].iter_mut().zip(&dz) {
                        *g += c * d;
                    }
                }
            }
        }
        (loss, grad)
    }

    pub fn adam_step(&mut self, grad: &[f64], cfg: &LearnerConfig) {
        self.t += 1;
        let b1t = 1.0 - cfg.beta1.powi(self.t as i32);
        let b2t = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..self.params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            self.params[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
    }

    /// Runs `iterations` Adam steps on uniformly drawn mini-batches and
    /// returns the per-iteration batch losses.
    pub fn train(&mut self, data: &[Sample], cfg: &LearnerConfig, rng: &mut RandomStream) -> Vec<f64> {
        let mut losses = Vec::with_capacity(cfg.iterations);
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.iterations {
            batch.clear();
            for _ in 0..cfg.batch_size.min(data.len().max(1)) {
                batch.push(data[rng.below(data.len())].clone());
            }
            let (loss, grad) = self.loss_grad(&batch);
            self.adam_step(&grad, cfg);
            losses.push(loss);
        }
        losses
    }

    pub fn to_snapshot(&self) -> Snapshot {
        let mut extra = serde_json::Map::new();
        extra.insert("input_dim".into(), self.input_dim.into());
        extra.insert("h".into(), self.h.into());
        extra.insert("num_tasks".into(), self.num_tasks.into());
        Snapshot {
            header: SnapshotHeader {
                kind: "feature_learner".into(),
                shape: vec![self.params.len()],
                init_scheme: "normal(0,0.05)".into(),
                rng_state: self.seed,
                extra,
            },
            params: self.params.clone(),
        }
    }
}

/// Training set from the log: transitions of tasks below `warmup_tasks`,
/// keeping each zero-reward transition with probability `zero_keep`.
pub fn build_dataset(log: &TransitionLog, warmup_tasks: usize, zero_keep: f64, rng: &mut RandomStream) -> Result<Vec<Sample>> {
    if warmup_tasks == 0 {
        return Err(Error::MissingWarmup(0));
    }
    log.covers_tasks(warmup_tasks).map_err(Error::MissingWarmup)?;
    let mut out = Vec::new();
    for e in log.iter().filter(|e| e.task < warmup_tasks) {
        if e.tr.reward == 0.0 && !rng.bernoulli(zero_keep) {
            continue;
        }
        let mut input = Vec::with_capacity(e.tr.s.dim() * 2);
        input.extend_from_slice(&e.tr.s);
        input.extend_from_slice(&e.tr.s_next);
        out.push(Sample { input, task: e.task, reward: e.tr.reward });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Fits shared features and per-task read-outs on the warm-up part of a log.
pub fn learn_features(log: &TransitionLog, warmup_tasks: usize, cfg: &LearnerConfig, rng: &mut RandomStream) -> Result<FeatureLearner> {
    let data = build_dataset(log, warmup_tasks, cfg.zero_keep, rng)?;
    let input_dim = data[0].input.len();
    let mut learner = FeatureLearner::new(input_dim, cfg.h, warmup_tasks, cfg.init_std, rng);
    learner.train(&data, cfg, rng);
    Ok(learner)
}
