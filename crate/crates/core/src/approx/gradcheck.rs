//! Central-difference verification of hand-derived gradients.

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// |a - n| / max(|a|, |n|, 1e-6)
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares `analytic[i]` with the central difference of `loss` at every
/// coordinate in `coords`.
pub fn gradcheck<F>(mut loss: F, params: &[f64], analytic: &[f64], coords: &[usize], h: f64, tolerance: f64) -> GradReport
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = params.to_vec();
    let mut report = GradReport {
        max_rel_err: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        tolerance,
        pass: true,
    };
    for &i in coords {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss(&p);
        p[i] = orig - h;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_rel_err || err.is_nan() {
            report.max_rel_err = err;
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    report.pass = report.max_rel_err <= tolerance;
    report
}

pub fn gradcheck_all<F>(loss: F, params: &[f64], analytic: &[f64], tolerance: f64) -> GradReport
where
    F: FnMut(&[f64]) -> f64,
{
    let coords: Vec<usize> = (0..params.len()).collect();
    gradcheck(loss, params, analytic, &coords, DEFAULT_STEP, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let a = [3.0, -1.0, 0.5];
        let loss = |p: &[f64]| p.iter().zip(&a).map(|(x, c)| c * x * x).sum::<f64>();
        let p = [0.7, -1.3, 2.0];
        let g: Vec<f64> = p.iter().zip(&a).map(|(x, c)| 2.0 * c * x).collect();
        let r = gradcheck_all(loss, &p, &g, 1e-7);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn wrong_gradient_fails() {
        let loss = |p: &[f64]| p[0] * p[0];
        let r = gradcheck_all(loss, &[1.0], &[3.0], 1e-4);
        assert!(!r.pass);
        assert_eq!(r.worst_index, 0);
    }
}
