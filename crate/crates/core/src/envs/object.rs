//! Four-room object-collection environment.
//!
//! The agent is a point in [0,1]^2 moving in four directions with Gaussian
//! step lengths. Walls along x = 0.5 and y = 0.5 split the area into rooms
//! joined by door gaps. Twelve objects can be picked up once per episode and
//! the episode ends when the goal disc is reached.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rbf::{self, Metric};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::types::{ActionId, DiscreteFeatureSet, Environment, FeatureVec, StateVec, TaskSpec, Transition};

pub const NUM_OBJECTS: usize = 12;
pub const OBJECT_RADIUS: f64 = 0.04;
pub const START: (f64, f64) = (0.05, 0.05);
pub const GOAL_CENTER: (f64, f64) = (0.86, 0.86);
pub const GOAL_RADIUS: f64 = 0.1;
pub const STEP_MEAN: f64 = 0.05;
pub const STEP_STD: f64 = 0.005;
/// 100 position RBFs + 12 memory bits + constant.
pub const STATE_DIM: usize = 113;

const DEFAULT_MODIFIED_LAYOUT: &str = include_str!("../../data/objects_modified.txt");
const DEFAULT_ORIGINAL_LAYOUT: &str = include_str!("../../data/objects_original.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Two object properties (colour x shape), 5-dim features.
    Modified,
    /// Three object colours, 4-dim features.
    Original,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Orange,
    Blue,
    Pink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box,
    Triangle,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub position: (f64, f64),
    pub color: Color,
    pub shape: Shape,
}

/// Wall geometry: one wall along x = `center` and one along y = `center`,
/// each with a door gap centred in either half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WallLayout {
    pub center: f64,
    pub wall_width: f64,
    pub door_width: f64,
}

impl Default for WallLayout {
    fn default() -> Self {
        WallLayout { center: 0.5, wall_width: 0.04, door_width: 0.12 }
    }
}

impl WallLayout {
    fn in_door(&self, t: f64) -> bool {
        let half = self.door_width / 2.0;
        let lo_door = self.center / 2.0;
        let hi_door = (1.0 + self.center) / 2.0;
        (t - lo_door).abs() <= half || (t - hi_door).abs() <= half
    }

    pub fn is_wall(&self, p: (f64, f64)) -> bool {
        let hw = self.wall_width / 2.0;
        let vertical = (p.0 - self.center).abs() <= hw && !self.in_door(p.1);
        let horizontal = (p.1 - self.center).abs() <= hw && !self.in_door(p.0);
        vertical || horizontal
    }

    /// True when the straight move from `a` to `b` touches a wall or leaves
    /// the unit square.
    pub fn blocks(&self, a: (f64, f64), b: (f64, f64)) -> bool {
        let inside = |p: (f64, f64)| (0.0..=1.0).contains(&p.0) && (0.0..=1.0).contains(&p.1);
        if !inside(b) {
            return true;
        }
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = (len / (self.wall_width / 8.0)).ceil().max(1.0) as usize;
        (1..=n).any(|i| {
            let t = i as f64 / n as f64;
            self.is_wall((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)))
        })
    }
}

pub fn parse_layout(text: &str) -> std::result::Result<Vec<ObjectRecord>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(format!("line {}: expected `x y color shape`", lineno + 1));
        }
        let coord = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1));
        let color = match fields[2] {
            "orange" => Color::Orange,
            "blue" => Color::Blue,
            "pink" => Color::Pink,
            other => return Err(format!("line {}: unknown color {other}", lineno + 1)),
        };
        let shape = match fields[3] {
            "box" => Shape::Box,
            "triangle" => Shape::Triangle,
            "none" => Shape::None,
            other => return Err(format!("line {}: unknown shape {other}", lineno + 1)),
        };
        out.push(ObjectRecord { position: (coord(fields[0])?, coord(fields[1])?), color, shape });
    }
    Ok(out)
}

pub fn default_layout(variant: Variant) -> Vec<ObjectRecord> {
    let text = match variant {
        Variant::Modified => DEFAULT_MODIFIED_LAYOUT,
        Variant::Original => DEFAULT_ORIGINAL_LAYOUT,
    };
    parse_layout(text).expect("bundled layout parses")
}

pub fn load_layout(path: &Path) -> Result<Vec<ObjectRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_layout(&text).map_err(|msg| Error::Parse { path: path.to_path_buf(), msg })
}

/// The feature atoms of a variant, in their fixed order.
pub fn feature_atoms(variant: Variant) -> DiscreteFeatureSet {
    let rows: Vec<Vec<f64>> = match variant {
        Variant::Modified => vec![
            vec![0., 0., 0., 0., 0.],
            vec![1., 0., 1., 0., 0.],
            vec![1., 0., 0., 1., 0.],
            vec![0., 1., 1., 0., 0.],
            vec![0., 1., 0., 1., 0.],
            vec![0., 0., 0., 0., 1.],
        ],
        Variant::Original => vec![
            vec![0., 0., 0., 0.],
            vec![1., 0., 0., 0.],
            vec![0., 1., 0., 0.],
            vec![0., 0., 1., 0.],
            vec![0., 0., 0., 1.],
        ],
    };
    DiscreteFeatureSet::new(rows.into_iter().map(FeatureVec).collect()).expect("atoms are distinct")
}

fn object_encoding(variant: Variant, obj: &ObjectRecord) -> Vec<f64> {
    match variant {
        Variant::Modified => vec![
            f64::from(obj.color == Color::Orange),
            f64::from(obj.color == Color::Blue),
            f64::from(obj.shape == Shape::Box),
            f64::from(obj.shape == Shape::Triangle),
            0.0,
        ],
        Variant::Original => vec![
            f64::from(obj.color == Color::Orange),
            f64::from(obj.color == Color::Blue),
            f64::from(obj.color == Color::Pink),
            0.0,
        ],
    }
}

/// Feature of a step given the collection flags before and after it.
pub fn object_feature(
    variant: Variant,
    objects: &[ObjectRecord],
    prev_collected: &[bool],
    new_collected: &[bool],
    reached_goal: bool,
) -> FeatureVec {
    let dim = match variant {
        Variant::Modified => 5,
        Variant::Original => 4,
    };
    if reached_goal {
        let mut v = vec![0.0; dim];
        v[dim - 1] = 1.0;
        return FeatureVec(v);
    }
    let picked = prev_collected.iter().zip(new_collected).position(|(&before, &after)| !before && after);
    match picked {
        Some(j) => FeatureVec(object_encoding(variant, &objects[j])),
        None => FeatureVec(vec![0.0; dim]),
    }
}

#[derive(Clone, Debug)]
pub struct ObjectCollectionEnv {
    variant: Variant,
    walls: WallLayout,
    objects: Vec<ObjectRecord>,
    atoms: DiscreteFeatureSet,
    centers: Vec<(f64, f64)>,
    rbf_sigma: f64,
    task: TaskSpec,
    collected: Vec<bool>,
    agent_pos: (f64, f64),
}

impl ObjectCollectionEnv {
    pub fn new(variant: Variant) -> Self {
        Self::with_layout(variant, WallLayout::default(), default_layout(variant), rbf::DEFAULT_POSITION_SIGMA)
            .expect("default layout is valid")
    }

    pub fn with_layout(
        variant: Variant,
        walls: WallLayout,
        objects: Vec<ObjectRecord>,
        rbf_sigma: f64,
    ) -> Result<Self> {
        if objects.len() != NUM_OBJECTS {
            return Err(Error::Config(format!("expected {NUM_OBJECTS} objects, got {}", objects.len())));
        }
        if !(rbf_sigma > 0.0) {
            return Err(Error::Config("rbf sigma must be positive".into()));
        }
        for (i, o) in objects.iter().enumerate() {
            if walls.is_wall(o.position) {
                return Err(Error::Config(format!("object {i} lies inside a wall")));
            }
            let bad_shape = match variant {
                Variant::Modified => o.shape == Shape::None || o.color == Color::Pink,
                Variant::Original => false,
            };
            if bad_shape {
                return Err(Error::Config(format!("object {i} does not fit the {variant:?} variant")));
            }
        }
        let atoms = feature_atoms(variant);
        let goal_dim = atoms.dim();
        let mut w = vec![0.0; goal_dim];
        w[goal_dim - 1] = 1.0;
        Ok(ObjectCollectionEnv {
            variant,
            walls,
            objects,
            atoms,
            centers: rbf::grid_centers(),
            rbf_sigma,
            task: TaskSpec::Linear { w },
            collected: vec![false; NUM_OBJECTS],
            agent_pos: START,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn objects(&self) -> &[ObjectRecord] {
        &self.objects
    }

    pub fn walls(&self) -> &WallLayout {
        &self.walls
    }

    pub fn agent_pos(&self) -> (f64, f64) {
        self.agent_pos
    }

    pub fn collected(&self) -> &[bool] {
        &self.collected
    }

    /// Place the agent (tests and diagnostics).
    pub fn set_agent_pos(&mut self, pos: (f64, f64)) {
        self.agent_pos = pos;
    }

    pub fn encode_state(&self) -> StateVec {
        let mut v = Vec::with_capacity(STATE_DIM);
        rbf::rbf_encode_position_into(self.agent_pos, &self.centers, self.rbf_sigma, Metric::Euclidean, &mut v);
        v.extend(self.collected.iter().map(|&c| f64::from(c)));
        v.push(1.0);
        StateVec(v)
    }

    fn direction(a: ActionId) -> (f64, f64) {
        match a.0 {
            0 => (0.0, 1.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            3 => (1.0, 0.0),
            other => panic!("object environment has 4 actions, got {other}"),
        }
    }
}

impl Environment for ObjectCollectionEnv {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn feature_dim(&self) -> usize {
        self.atoms.dim()
    }

    fn feature_set(&self) -> Option<&DiscreteFeatureSet> {
        Some(&self.atoms)
    }

    fn set_task(&mut self, task: TaskSpec) {
        self.task = task;
    }

    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn reset(&mut self, _rng: &mut RandomStream) -> StateVec {
        self.agent_pos = START;
        self.collected.iter_mut().for_each(|c| *c = false);
        self.encode_state()
    }

    fn step(&mut self, a: ActionId, rng: &mut RandomStream) -> Transition {
        let s = self.encode_state();
        let (dx, dy) = Self::direction(a);
        let len = rng.normal(STEP_MEAN, STEP_STD);
        let from = self.agent_pos;
        let to = (from.0 + dx * len, from.1 + dy * len);
        if !self.walls.blocks(from, to) {
            self.agent_pos = to;
        }

        let prev = self.collected.clone();
        let pos = self.agent_pos;
        let dist = |p: (f64, f64)| ((pos.0 - p.0).powi(2) + (pos.1 - p.1).powi(2)).sqrt();
        let reached_goal = dist(GOAL_CENTER) <= GOAL_RADIUS;
        if !reached_goal {
            let nearest = self
                .objects
                .iter()
                .enumerate()
                .filter(|(j, o)| !self.collected[*j] && dist(o.position) <= OBJECT_RADIUS)
                .min_by(|x, y| dist(x.1.position).total_cmp(&dist(y.1.position)))
                .map(|(j, _)| j);
            if let Some(j) = nearest {
                self.collected[j] = true;
            }
        }
        let phi = object_feature(self.variant, &self.objects, &prev, &self.collected, reached_goal);
        let reward = self.task.reward(&phi);
        Transition { s, a, s_next: self.encode_state(), phi, reward, terminal: reached_goal }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> ObjectCollectionEnv {
        ObjectCollectionEnv::new(Variant::Modified)
    }

    #[test]
    fn reset_state() {
        let mut e = env();
        let s = e.reset(&mut RandomStream::new(0));
        assert_eq!(s.dim(), STATE_DIM);
        assert_eq!(e.agent_pos(), (0.05, 0.05));
        assert!(s[100..112].iter().all(|&b| b == 0.0));
        assert_eq!(s[112], 1.0);
    }

    #[test]
    fn layout_is_balanced() {
        let objs = default_layout(Variant::Modified);
        for color in [Color::Orange, Color::Blue] {
            for shape in [Shape::Box, Shape::Triangle] {
                let n = objs.iter().filter(|o| o.color == color && o.shape == shape).count();
                assert_eq!(n, 3);
            }
        }
        for i in 0..objs.len() {
            for j in i + 1..objs.len() {
                let (a, b) = (objs[i].position, objs[j].position);
                assert!(((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() > 2.0 * OBJECT_RADIUS);
            }
        }
    }

    #[test]
    fn wall_rejects_move() {
        let mut e = env();
        let mut rng = RandomStream::new(1);
        e.reset(&mut rng);
        // Just left of the solid part of the vertical wall, below the crossing.
        e.set_agent_pos((0.46, 0.45));
        e.step(ActionId(3), &mut rng);
        assert_eq!(e.agent_pos(), (0.46, 0.45));
        // Leaving the square is rejected too.
        e.set_agent_pos((0.02, 0.45));
        e.step(ActionId(2), &mut rng);
        assert_eq!(e.agent_pos(), (0.02, 0.45));
    }

    #[test]
    fn door_lets_agent_through() {
        let mut e = env();
        let mut rng = RandomStream::new(2);
        e.reset(&mut rng);
        e.set_agent_pos((0.46, 0.25));
        e.step(ActionId(3), &mut rng);
        assert!(e.agent_pos().0 > 0.46);
    }

    #[test]
    fn goal_is_terminal() {
        let mut e = env();
        let mut rng = RandomStream::new(3);
        e.reset(&mut rng);
        e.set_agent_pos((0.86, 0.72));
        let tr = e.step(ActionId(0), &mut rng);
        assert!(tr.terminal);
        assert_eq!(tr.phi.0, vec![0., 0., 0., 0., 1.]);
        assert_eq!(tr.reward, 1.0);
    }

    #[test]
    fn collecting_orange_box() {
        let mut e = env();
        let mut rng = RandomStream::new(4);
        e.reset(&mut rng);
        e.set_agent_pos((0.20, 0.10));
        let tr = e.step(ActionId(3), &mut rng);
        assert_eq!(tr.phi.0, vec![1., 0., 1., 0., 0.]);
        assert!(!tr.terminal);
        assert_eq!(tr.s_next[100], 1.0);
        // Gone for the rest of the episode.
        e.set_agent_pos((0.20, 0.10));
        let tr = e.step(ActionId(3), &mut rng);
        assert_eq!(tr.phi.0, vec![0.; 5]);
    }

    #[test]
    fn nothing_happened_feature() {
        let objs = default_layout(Variant::Modified);
        let flags = vec![false; NUM_OBJECTS];
        assert_eq!(object_feature(Variant::Modified, &objs, &flags, &flags, false).0, vec![0.0; 5]);
    }

    #[test]
    fn original_variant_features() {
        let objs = default_layout(Variant::Original);
        let prev = vec![false; NUM_OBJECTS];
        let mut new = prev.clone();
        new[2] = true; // pink
        assert_eq!(object_feature(Variant::Original, &objs, &prev, &new, false).0, vec![0., 0., 1., 0.]);
        assert_eq!(feature_atoms(Variant::Original).len(), 5);
    }

    #[test]
    fn layout_parse_errors() {
        assert!(parse_layout("0.1 0.2 orange").is_err());
        assert!(parse_layout("0.1 0.2 green box").is_err());
        assert!(parse_layout("# only a comment\n").unwrap().is_empty());
    }
}
