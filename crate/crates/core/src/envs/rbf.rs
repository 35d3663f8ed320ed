//! Radial-basis encodings of positions and orientations.

use std::f64::consts::PI;

/// Default position width: squared grid spacing, so a neighbouring centre
/// fires at exp(-1).
pub const DEFAULT_POSITION_SIGMA: f64 = 1.0 / 81.0;
/// Orientation width.
pub const ORIENTATION_SIGMA: f64 = PI / 5.0;
pub const ORIENTATION_CENTERS: usize = 20;
pub const GRID_SIDE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Torus,
}

/// Wrap-around distance on the unit torus.
pub fn torus_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(1.0 - d)
    };
    let dx = wrap(p.0 - q.0);
    let dy = wrap(p.1 - q.1);
    (dx * dx + dy * dy).sqrt()
}

/// 10x10 centres at {0, 1/9, ..., 1}^2, x-major.
pub fn grid_centers() -> Vec<(f64, f64)> {
    let step = 1.0 / (GRID_SIDE - 1) as f64;
    let mut out = Vec::with_capacity(GRID_SIDE * GRID_SIDE);
    for i in 0..GRID_SIDE {
        for j in 0..GRID_SIDE {
            out.push((i as f64 * step, j as f64 * step));
        }
    }
    out
}

/// exp(-d^2 / sigma) for every centre.
pub fn rbf_encode_position(pos: (f64, f64), centers: &[(f64, f64)], sigma: f64, metric: Metric) -> Vec<f64> {
    let mut out = Vec::with_capacity(centers.len());
    rbf_encode_position_into(pos, centers, sigma, metric, &mut out);
    out
}

pub(crate) fn rbf_encode_position_into(
    pos: (f64, f64),
    centers: &[(f64, f64)],
    sigma: f64,
    metric: Metric,
    out: &mut Vec<f64>,
) {
    for &c in centers {
        let d2 = match metric {
            Metric::Euclidean => (pos.0 - c.0).powi(2) + (pos.1 - c.1).powi(2),
            Metric::Torus => torus_distance(pos, c).powi(2),
        };
        out.push((-d2 / sigma).exp());
    }
}

/// Shortest angular distance; pi and -pi coincide.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Centres -pi + j * 2pi/20, evenly spaced around the circle.
pub fn orientation_centers() -> Vec<f64> {
    (0..ORIENTATION_CENTERS)
        .map(|j| -PI + j as f64 * 2.0 * PI / ORIENTATION_CENTERS as f64)
        .collect()
}

pub fn rbf_encode_orientation(theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(ORIENTATION_CENTERS);
    rbf_encode_orientation_into(theta, &mut out);
    out
}

pub(crate) fn rbf_encode_orientation_into(theta: f64, out: &mut Vec<f64>) {
    for c in orientation_centers() {
        let d = angle_distance(theta, c);
        out.push((-d * d / ORIENTATION_SIGMA).exp());
    }
}
