//! Per-task value functions and generalised policy improvement over them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reward::RewardModel;
use crate::approx::{Snapshot, ValueStore};
use crate::error::{Error, Result};
use crate::types::dot;

/// Q-value of one (s, a) from its stored outputs and a projection vector
/// (reward weights, atom rewards or bin rewards).
pub fn q_from_xi(values: &[f64], projection: &[f64]) -> f64 {
    dot(values, projection)
}

/// Joint argmax over policies and actions of `q[policy][action]`. Returns
/// (action, policy). Ties go to the lowest policy index, then the lowest
/// action.
pub fn gpi_select(q: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = f64::NEG_INFINITY;
    for (c, row) in q.iter().enumerate() {
        for (a, &v) in row.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = (a, c);
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct LibraryEntry {
    pub values: ValueStore,
    pub reward: RewardModel,
    /// Projection of `reward` onto the output layout, kept in sync by the agent.
    pub projection: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolicyLibrary {
    entries: Vec<LibraryEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    task: usize,
    file: String,
    reward: RewardModel,
    projection: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    agent: String,
    entries: Vec<ManifestEntry>,
}

impl PolicyLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: LibraryEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &LibraryEntry {
        &self.entries[i]
    }

    pub fn entry_mut(&mut self, i: usize) -> &mut LibraryEntry {
        &mut self.entries[i]
    }

    pub fn last(&self) -> Option<&LibraryEntry> {
        self.entries.last()
    }

    /// Q-values of every action of entry `k` at `s` under `projection`.
    /// `buf` holds the raw [a][k] outputs.
    pub fn q_values_into(&self, k: usize, s: &crate::types::StateVec, projection: &[f64], buf: &mut Vec<f64>, q: &mut Vec<f64>) {
        let store = &self.entries[k].values;
        let width = store.outputs();
        let na = store.num_actions();
        buf.resize(na * width, 0.0);
        store.predict_all_into(s, buf);
        q.clear();
        q.extend(buf.chunks_exact(width).map(|v| q_from_xi(v, projection)));
    }

    /// GPI over entries `from..len()` at `s`: (action, source entry).
    pub fn gpi(&self, s: &crate::types::StateVec, projection: &[f64], from: usize, buf: &mut Vec<f64>, q: &mut Vec<f64>) -> (usize, usize) {
        let mut best = (0, from);
        let mut best_v = f64::NEG_INFINITY;
        for k in from..self.entries.len() {
            self.q_values_into(k, s, projection, buf, q);
            for (a, &v) in q.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = (a, k);
                }
            }
        }
        best
    }

    /// Writes `task_<i>.txt` per entry plus `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, agent: &str, rng_state: u64) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = Manifest { agent: agent.to_string(), entries: Vec::new() };
        for (i, e) in self.entries.iter().enumerate() {
            let file = format!("task_{i}.txt");
            e.values.to_snapshot(rng_state).write(&dir.join(&file))?;
            manifest.entries.push(ManifestEntry {
                task: i,
                file,
                reward: e.reward.clone(),
                projection: e.projection.clone(),
            });
        }
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }

    /// Reads a library written by [`PolicyLibrary::write`]; returns it with
    /// the agent name.
    pub fn read(dir: &Path) -> Result<(Self, String)> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut lib = PolicyLibrary::new();
        for m in manifest.entries {
            let snap = Snapshot::read(&dir.join(&m.file))?;
            lib.push(LibraryEntry { values: ValueStore::from_snapshot(&snap)?, reward: m.reward, projection: m.projection });
        }
        Ok((lib, manifest.agent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_from_xi_examples() {
        assert_eq!(q_from_xi(&[2.0, 3.0], &[1.0, -1.0]), -1.0);
        assert_eq!(q_from_xi(&[2.0, 3.0], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn gpi_ties() {
        assert_eq!(gpi_select(&[vec![1.0, 2.0]]), (1, 0));
        assert_eq!(gpi_select(&[vec![1.0, 2.0], vec![2.0, 0.0]]), (1, 0));
        assert_eq!(gpi_select(&[vec![0.0, 1.0], vec![3.0, 3.0]]), (0, 1));
        assert_eq!(gpi_select(&[vec![0.0, 0.0], vec![0.0, 0.0]]), (0, 0));
    }
}
