//! Named batches of random-instance checks.

use super::{
    check_contraction, check_gpi_bound, check_indicator_reformulation, check_normalization, check_sf_xi_equivalence,
    OracleReport, Table, TabularModel,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RandomStream};
use crate::types::{DiscreteFeatureSet, FeatureVec, TaskSpec};

pub const SUITES: [&str; 5] = ["contraction", "normalization", "equivalence", "indicator", "gpi_bound"];

pub const GAMMA: f64 = 0.9;

fn uniform_vec(n: usize, rng: &mut RandomStream) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()
}

/// Random non-terminating model with `m` indicator atoms.
pub fn indicator_instance(seed: u64, num_states: usize, num_actions: usize, m: usize) -> TabularModel {
    let mut rng = RandomStream::new(seed);
    TabularModel::random(num_states, num_actions, m, 3, GAMMA, &mut rng)
}

/// Random model whose atoms are `m` random points of [0, 1]^dim.
pub fn dense_feature_instance(seed: u64, num_states: usize, num_actions: usize, m: usize, dim: usize) -> TabularModel {
    let mut rng = RandomStream::new(seed);
    let atoms: Vec<FeatureVec> = (0..m).map(|_| FeatureVec((0..dim).map(|_| rng.uniform()).collect())).collect();
    let atoms = DiscreteFeatureSet::new(atoms).expect("random atoms are distinct");
    TabularModel::random_with_atoms(num_states, num_actions, atoms, 3, GAMMA, &mut rng)
}

pub fn contraction_suite(master: u64, count: usize) -> Vec<OracleReport> {
    (0..count as u64)
        .flat_map(|i| {
            let seed = derive_seed(master, "contraction", i);
            let model = indicator_instance(seed, 6, 3, 4);
            let mut rng = RandomStream::new(seed ^ 1);
            let r = uniform_vec(4, &mut rng);
            let policy: Vec<usize> = (0..6).map(|_| rng.below(3)).collect();
            let mut noisy = Table::zeros(6, 3, 4);
            for v in &mut noisy.values {
                *v = rng.normal(0.0, 5.0);
            }
            [
                check_contraction(&model, &r, &policy, None, 1000, seed),
                check_contraction(&model, &r, &policy, Some(noisy), 1000, seed),
            ]
        })
        .collect()
}

pub fn normalization_suite(master: u64, count: usize) -> Vec<OracleReport> {
    (0..count as u64)
        .map(|i| {
            let seed = derive_seed(master, "normalization", i);
            let model = indicator_instance(seed, 6, 3, 4);
            let r = uniform_vec(4, &mut RandomStream::new(seed ^ 1));
            check_normalization(&model, &r, 1e-9, seed)
        })
        .collect()
}

pub fn equivalence_suite(master: u64, count: usize) -> Vec<OracleReport> {
    (0..count as u64)
        .map(|i| {
            let seed = derive_seed(master, "equivalence", i);
            let model = dense_feature_instance(seed, 5, 3, 5, 3);
            let w = uniform_vec(3, &mut RandomStream::new(seed ^ 1));
            check_sf_xi_equivalence(&model, &w, 1e-8, seed)
        })
        .collect()
}

pub fn indicator_suite(master: u64, count: usize) -> Vec<OracleReport> {
    (0..count as u64)
        .map(|i| {
            let seed = derive_seed(master, "indicator", i);
            let model = indicator_instance(seed, 5, 3, 4);
            let r = uniform_vec(4, &mut RandomStream::new(seed ^ 1));
            check_indicator_reformulation(&model, &r, 1e-8, seed)
        })
        .collect()
}

pub fn gpi_bound_suite(master: u64, count: usize) -> Vec<OracleReport> {
    (0..count as u64)
        .map(|i| {
            let seed = derive_seed(master, "gpi_bound", i);
            let model = indicator_instance(seed, 6, 3, 4);
            let mut rng = RandomStream::new(seed ^ 1);
            let atoms = model.atoms().clone();
            let mut task = || TaskSpec::Tabular { atoms: atoms.clone(), rewards: uniform_vec(4, &mut rng) };
            let sources = vec![task(), task(), task()];
            let target = task();
            check_gpi_bound(&model, &sources, &target, seed)
        })
        .collect()
}

/// Runs a suite by name ("all" runs every suite) at acceptance sizes.
pub fn run_suite(name: &str, master: u64) -> Result<Vec<OracleReport>> {
    Ok(match name {
        "contraction" => contraction_suite(master, 50),
        "normalization" => normalization_suite(master, 50),
        "equivalence" => equivalence_suite(master, 100),
        "indicator" => indicator_suite(master, 20),
        "gpi_bound" => gpi_bound_suite(master, 100),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, master)?);
            }
            out
        }
        other => return Err(Error::Config(format!("unknown oracle suite {other}; expected one of {SUITES:?} or all"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for reps in [
            contraction_suite(1, 3),
            normalization_suite(1, 3),
            equivalence_suite(1, 3),
            indicator_suite(1, 3),
            gpi_bound_suite(1, 3),
        ] {
            for r in reps {
                assert!(r.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(run_suite("nope", 0).is_err());
    }
}
