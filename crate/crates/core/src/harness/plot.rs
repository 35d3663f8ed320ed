//! Aggregates record files into per-agent mean and standard-error curves.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::format::sig9;
use super::run::{RunRecord, TaskRow, RECORD_HEADER};
use crate::error::{Error, Result};

/// Mean and standard error per task index.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub agent: String,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

/// Trailing moving average; window 1 leaves the series unchanged.
pub fn smooth(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for i in 0..xs.len() {
        acc += xs[i];
        if i >= w {
            acc -= xs[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Every file below `dir` (recursively) whose header is the record header.
pub fn find_records(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") && is_record_file(&path)? {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn is_record_file(path: &Path) -> Result<bool> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.headers()?.iter().eq(RECORD_HEADER))
}

/// Series of one field, one per (file, repetition), grouped by agent.
fn series(files: &[PathBuf], field: fn(&TaskRow) -> f64) -> Result<BTreeMap<String, Vec<Vec<f64>>>> {
    let mut by_agent: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for f in files {
        let mut reps: BTreeMap<(String, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for row in RunRecord::read_csv(f)? {
            reps.entry((row.agent.clone(), row.repetition)).or_default().push((row.task_index, field(&row)));
        }
        for ((agent, _), mut pts) in reps {
            pts.sort_by_key(|p| p.0);
            by_agent.entry(agent).or_default().push(pts.into_iter().map(|p| p.1).collect());
        }
    }
    Ok(by_agent)
}

fn curves(by_agent: BTreeMap<String, Vec<Vec<f64>>>, window: usize) -> Result<Vec<Curve>> {
    let mut expected: Option<usize> = None;
    let mut out = Vec::new();
    for (agent, runs) in by_agent {
        for r in &runs {
            match expected {
                None => expected = Some(r.len()),
                Some(n) if n != r.len() => return Err(Error::TaskCountMismatch(n, r.len())),
                _ => {}
            }
        }
        let runs: Vec<Vec<f64>> = runs.iter().map(|r| smooth(r, window)).collect();
        let n = expected.unwrap_or(0);
        let (mut mean, mut sem) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for t in 0..n {
            let col: Vec<f64> = runs.iter().map(|r| r[t]).collect();
            let (m, s) = mean_sem(&col);
            mean.push(m);
            sem.push(s);
        }
        out.push(Curve { agent, mean, sem });
    }
    Ok(out)
}

/// Per-task return curves of every agent found below `dir`.
pub fn task_curves(dir: &Path, window: usize) -> Result<Vec<Curve>> {
    let files = find_records(dir)?;
    curves(series(&files, |r| r.total_task_return)?, window)
}

pub fn cumulative_curves(dir: &Path) -> Result<Vec<Curve>> {
    let files = find_records(dir)?;
    curves(series(&files, |r| r.cumulative_return)?, 1)
}

pub fn write_curves(path: &Path, curves: &[Curve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["task_index".to_string()];
    for c in curves {
        header.push(format!("{}_mean", c.agent));
        header.push(format!("{}_sem", c.agent));
    }
    w.write_record(&header)?;
    let n = curves.first().map_or(0, |c| c.mean.len());
    for t in 0..n {
        let mut rec = vec![t.to_string()];
        for c in curves {
            rec.push(sig9(c.mean[t]));
            rec.push(sig9(c.sem[t]));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes returns.csv (smoothed per-task return) and cumulative.csv.
pub fn plot_data(input: &Path, output: &Path, window: usize) -> Result<()> {
    let tasks = task_curves(input, window)?;
    let cumulative = cumulative_curves(input)?;
    fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    write_curves(&output.join("returns.csv"), &tasks)?;
    write_curves(&output.join("cumulative.csv"), &cumulative)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing() {
        assert_eq!(smooth(&[1.0, 2.0, 3.0], 1), vec![1.0, 2.0, 3.0]);
        assert_eq!(smooth(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn sem_of_pair() {
        let (m, s) = mean_sem(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_sem(&[4.0]), (4.0, 0.0));
    }
}
