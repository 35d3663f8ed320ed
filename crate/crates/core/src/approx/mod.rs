//! Function approximators with hand-derived gradients.

pub mod gradcheck;
pub mod linear;
pub mod mlp;
pub mod snapshot;
pub mod softmax;
pub mod tabular;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use gradcheck::{gradcheck, gradcheck_all, GradReport};
pub use linear::LinearValueMap;
pub use mlp::{Mlp, RacerValueNet, RewardMlp};
pub use snapshot::{Snapshot, SnapshotHeader};
pub use softmax::SoftmaxFeatureModel;
pub use tabular::{StepSchedule, TabularFeatureModel, TabularValues};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::types::StateVec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    Zero,
    Normal { mean: f64, std: f64 },
    /// Uniform in +-sqrt(1 / fan_in).
    FanIn,
}

impl InitScheme {
    pub const SMALL_NORMAL: InitScheme = InitScheme::Normal { mean: 0.0, std: 0.01 };

    pub fn draw(&self, fan_in: usize, rng: &mut RandomStream) -> f64 {
        match *self {
            InitScheme::Zero => 0.0,
            InitScheme::Normal { mean, std } => rng.normal(mean, std),
            InitScheme::FanIn => {
                let b = (1.0 / fan_in as f64).sqrt();
                rng.uniform_range(-b, b)
            }
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::Zero => write!(f, "zero"),
            InitScheme::Normal { mean, std } => write!(f, "normal({mean},{std})"),
            InitScheme::FanIn => write!(f, "uniform_fan_in"),
        }
    }
}

fn parse_init(s: &str) -> Result<InitScheme> {
    if s == "zero" {
        return Ok(InitScheme::Zero);
    }
    if s == "uniform_fan_in" {
        return Ok(InitScheme::FanIn);
    }
    if let Some(inner) = s.strip_prefix("normal(").and_then(|r| r.strip_suffix(')')) {
        if let Some((m, sd)) = inner.split_once(',') {
            if let (Ok(mean), Ok(std)) = (m.parse(), sd.parse()) {
                return Ok(InitScheme::Normal { mean, std });
            }
        }
    }
    Err(Error::Config(format!("unknown init scheme {s}")))
}

/// Storage behind a value function mapping (s, a) to `outputs()` numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ValueStore {
    /// One-hot states, direct updates.
    Tabular(TabularValues),
    Linear(LinearValueMap),
    Net(RacerValueNet),
}

fn hot(s: &StateVec) -> usize {
    s.hot_index().expect("tabular stores need one-hot states")
}

impl ValueStore {
    pub fn outputs(&self) -> usize {
        match self {
            ValueStore::Tabular(t) => t.outputs(),
            ValueStore::Linear(m) => m.outputs(),
            ValueStore::Net(n) => n.outputs(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            ValueStore::Tabular(t) => t.num_actions(),
            ValueStore::Linear(m) => m.num_actions(),
            ValueStore::Net(n) => n.num_actions(),
        }
    }

    /// Outputs of every action, laid out [a][k].
    pub fn predict_all_into(&self, s: &StateVec, out: &mut [f64]) {
        match self {
            ValueStore::Tabular(t) => out.copy_from_slice(t.state_values(hot(s))),
            ValueStore::Linear(m) => m.predict_all_into(s, out),
            ValueStore::Net(n) => n.predict_all_into(s, out),
        }
    }

    pub fn predict_into(&self, s: &StateVec, a: usize, out: &mut [f64]) {
        match self {
            ValueStore::Tabular(t) => out.copy_from_slice(t.values(hot(s), a)),
            ValueStore::Linear(m) => m.predict_into(s, a, out),
            ValueStore::Net(n) => n.predict_into(s, a, out),
        }
    }

    pub fn predict(&self, s: &StateVec, a: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.predict_into(s, a, &mut out);
        out
    }

    /// Moves output(s, a) toward `target`: a convex-combination step for
    /// tabular stores, an SGD step on the squared loss otherwise.
    pub fn update(&mut self, s: &StateVec, a: usize, target: &[f64], alpha: f64) {
        match self {
            ValueStore::Tabular(t) => t.update(hot(s), a, target, alpha),
            ValueStore::Linear(m) => m.sgd_step_unchecked(s, a, target, alpha),
            ValueStore::Net(n) => n.sgd_step(s, a, target, alpha),
        }
    }

    pub fn to_snapshot(&self, rng_state: u64) -> Snapshot {
        let mut extra = serde_json::Map::new();
        let (kind, shape, init, params) = match self {
            ValueStore::Tabular(t) => {
                extra.insert("schedule".into(), serde_json::to_value(t.schedule()).expect("serialisable"));
                let visits: Vec<u64> = (0..t.num_states())
                    .flat_map(|s| (0..t.num_actions()).map(move |a| (s, a)))
                    .map(|(s, a)| t.visits(s, a))
                    .collect();
                extra.insert("visits".into(), serde_json::to_value(visits).expect("serialisable"));
                ("tabular", vec![t.num_states(), t.num_actions(), t.outputs()], "zero".to_string(), t.params().to_vec())
            }
            ValueStore::Linear(m) => (
                "linear",
                vec![m.num_actions(), m.outputs(), m.state_dim()],
                m.init_scheme().to_string(),
                m.params().to_vec(),
            ),
            ValueStore::Net(n) => {
                extra.insert("subnets".into(), n.subnets().len().into());
                extra.insert("heads".into(), (n.outputs() / n.subnets().len()).into());
                extra.insert("num_actions".into(), n.num_actions().into());
                extra.insert("state_dim".into(), n.state_dim().into());
                ("racer_net", vec![n.param_count()], InitScheme::FanIn.to_string(), n.flat_params())
            }
        };
        Snapshot {
            header: SnapshotHeader { kind: kind.into(), shape, init_scheme: init, rng_state, extra },
            params,
        }
    }

    pub fn from_snapshot(snap: &Snapshot) -> Result<Self> {
        let h = &snap.header;
        let bad = |msg: &str| Error::Config(format!("snapshot of kind {}: {msg}", h.kind));
        let extra_usize = |key: &str| -> Result<usize> {
            h.extra.get(key).and_then(|v| v.as_u64()).map(|v| v as usize).ok_or_else(|| bad(key))
        };
        match h.kind.as_str() {
            "tabular" => {
                let [ns, na, k] = h.shape[..] else { return Err(bad("shape")) };
                let schedule: StepSchedule = h
                    .extra
                    .get("schedule")
                    .cloned()
                    .map(serde_json::from_value)
                    .transpose()?
                    .unwrap_or_default();
                let mut t = TabularValues::new(ns, na, k, schedule);
                t.params_mut().copy_from_slice(&snap.params);
                if let Some(v) = h.extra.get("visits") {
                    let visits: Vec<u64> = serde_json::from_value(v.clone())?;
                    for (i, n) in visits.into_iter().enumerate() {
                        t.set_visits(i / na, i % na, n);
                    }
                }
                Ok(ValueStore::Tabular(t))
            }
            "linear" => {
                let [na, k, d] = h.shape[..] else { return Err(bad("shape")) };
                let mut m = LinearValueMap::zeros(d, na, k);
                m.params_mut().copy_from_slice(&snap.params);
                m.set_init_scheme(parse_init(&h.init_scheme)?);
                Ok(ValueStore::Linear(m))
            }
            "racer_net" => {
                let subnets = extra_usize("subnets")?;
                let heads = extra_usize("heads")?;
                let na = extra_usize("num_actions")?;
                let d = extra_usize("state_dim")?;
                let mut n = RacerValueNet::new(d, na, subnets, heads, &mut RandomStream::new(0));
                if n.param_count() != snap.params.len() {
                    return Err(bad("parameter count"));
                }
                n.set_flat_params(&snap.params);
                Ok(ValueStore::Net(n))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips() {
        let mut rng = RandomStream::new(5);
        let mut tab = TabularValues::new(3, 2, 2, StepSchedule::RobbinsMonro { c: 10.0 });
        tab.update(1, 1, &[1.0, 2.0], 1.0);
        let stores = vec![
            ValueStore::Tabular(tab),
            ValueStore::Linear(LinearValueMap::new(4, 2, 3, InitScheme::SMALL_NORMAL, &mut rng)),
            ValueStore::Net(RacerValueNet::new(5, 3, 2, 4, &mut rng)),
        ];
        for store in stores {
            let snap = store.to_snapshot(7);
            let text = snap.to_text();
            let back = Snapshot::from_text(&text, std::path::Path::new("mem")).unwrap();
            assert_eq!(ValueStore::from_snapshot(&back).unwrap(), store);
        }
    }

    #[test]
    fn init_scheme_names_parse() {
        for s in [InitScheme::Zero, InitScheme::FanIn, InitScheme::SMALL_NORMAL] {
            assert_eq!(parse_init(&s.to_string()).unwrap(), s);
        }
    }
}
