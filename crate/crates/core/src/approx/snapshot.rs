//! Parameter snapshots: a JSON header line followed by one parameter per
//! line in round-trip exponent notation.
//!
//! ```text
//! {"kind":"linear","shape":[113,4,6],"init_scheme":"normal(0,0.01)","rng_state":42}
//! 1.2345e-3
//! ...
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub kind: String,
    pub shape: Vec<usize>,
    pub init_scheme: String,
    /// Seed of the stream the parameters were initialised from.
    pub rng_state: u64,
    /// Free-form extras (schedule, visit counts length, ...).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub params: Vec<f64>,
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialises");
        out.push('\n');
        for p in &self.params {
            out.push_str(&format!("{p:e}\n"));
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| parse_err("empty snapshot".into()))?;
        let header: SnapshotHeader = serde_json::from_str(head).map_err(|e| parse_err(e.to_string()))?;
        let params = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| l.trim().parse::<f64>().map_err(|e| parse_err(format!("value {i}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let expected: usize = header.shape.iter().product();
        if expected != params.len() {
            return Err(parse_err(format!("shape {:?} needs {expected} values, found {}", header.shape, params.len())));
        }
        Ok(Snapshot { header, params })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_text().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let snap = Snapshot {
            header: SnapshotHeader {
                kind: "linear".into(),
                shape: vec![2, 3],
                init_scheme: "normal(0,0.01)".into(),
                rng_state: 99,
                extra: Default::default(),
            },
            params: vec![0.1, -1e-300, 3.0, f64::MIN_POSITIVE, 1.0 / 3.0, -0.0],
        };
        let back = Snapshot::from_text(&snap.to_text(), Path::new("mem")).unwrap();
        assert_eq!(back.header, snap.header);
        for (a, b) in back.params.iter().zip(&snap.params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let text = "{\"kind\":\"x\",\"shape\":[3],\"init_scheme\":\"zero\",\"rng_state\":0}\n1e0\n";
        assert!(Snapshot::from_text(text, Path::new("mem")).is_err());
    }
}
