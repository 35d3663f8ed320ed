//! Append-only transition log.
//!
//! File format: one transition per line, tab-separated columns
//!
//! ```text
//! task_id  a  reward  terminal  s  s_next  phi
//! ```
//!
//! where `terminal` is 0 or 1 and the three vector columns hold
//! space-separated numbers. Numbers use round-trip exponent notation.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ActionId, FeatureVec, StateVec, Transition};

#[derive(Clone, Debug, PartialEq)]
pub struct LoggedTransition {
    pub task: usize,
    pub tr: Transition,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionLog {
    entries: Vec<LoggedTransition>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn split(field: &str) -> std::result::Result<Vec<f64>, String> {
    field.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| format!("{t}: {e}"))).collect()
}

impl TransitionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, task: usize, tr: Transition) {
        self.entries.push(LoggedTransition { task, tr });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LoggedTransition] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &LoggedTransition> {
        self.entries.iter()
    }

    /// Whether every task in 0..n has at least one transition.
    pub fn covers_tasks(&self, n: usize) -> std::result::Result<(), usize> {
        let mut seen = vec![false; n];
        for e in &self.entries {
            if e.task < n {
                seen[e.task] = true;
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(t) => Err(t),
            None => Ok(()),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for e in &self.entries {
            let t = &e.tr;
            writeln!(
                w,
                "{}\t{}\t{:e}\t{}\t{}\t{}\t{}",
                e.task,
                t.a.0,
                t.reward,
                u8::from(t.terminal),
                join(&t.s),
                join(&t.s_next),
                join(&t.phi)
            )
            .map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut log = TransitionLog::new();
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { path: path.to_path_buf(), msg: format!("line {}: {msg}", lineno + 1) };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(err(format!("expected 7 columns, found {}", cols.len())));
            }
            let task = cols[0].parse::<usize>().map_err(|e| err(e.to_string()))?;
            let a = cols[1].parse::<usize>().map_err(|e| err(e.to_string()))?;
            let reward = cols[2].parse::<f64>().map_err(|e| err(e.to_string()))?;
            let terminal = match cols[3] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("terminal flag {other}"))),
            };
            log.push(
                task,
                Transition {
                    s: StateVec(split(cols[4]).map_err(err)?),
                    a: ActionId(a),
                    s_next: StateVec(split(cols[5]).map_err(err)?),
                    phi: FeatureVec(split(cols[6]).map_err(err)?),
                    reward,
                    terminal,
                },
            );
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let mut log = TransitionLog::new();
        log.push(
            3,
            Transition {
                s: StateVec(vec![0.1, 1e-300, -2.5]),
                a: ActionId(2),
                s_next: StateVec(vec![0.2, 0.0, 1.0 / 3.0]),
                phi: FeatureVec(vec![1.0, 0.0]),
                reward: -0.75,
                terminal: true,
            },
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.tsv");
        log.write(&path).unwrap();
        assert_eq!(TransitionLog::read(&path).unwrap(), log);
        assert_eq!(log.covers_tasks(3), Err(0));
    }
}
