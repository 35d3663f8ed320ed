//! Bin discretisation of continuous feature dimensions.

/// Bins per feature dimension.
pub const BINS: usize = 11;
/// Spacing between neighbouring bin centres on [0, 1].
pub const DELTA: f64 = 1.0 / (BINS as f64 - 1.0);

const SNAP: f64 = 1e-12;

/// Bin centres 0.0, 0.1, ..., 1.0.
pub fn bin_centers() -> Vec<f64> {
    (0..BINS).map(|j| j as f64 * DELTA).collect()
}

/// Hat activation max(0, 1 - |x - phi| / delta) at every centre of a
/// sorted, evenly spaced grid. Only the two centres bracketing phi are
/// evaluated, and the upper one gets the complement of the lower one, so
/// rounding can never switch on a third bin.
pub fn cxi_encode(phi_k: f64, centers: &[f64], delta: f64) -> Vec<f64> {
    let mut out = vec![0.0; centers.len()];
    cxi_encode_into(phi_k, centers, delta, &mut out);
    out
}

pub fn cxi_encode_into(phi_k: f64, centers: &[f64], delta: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    if centers.is_empty() {
        return;
    }
    let j = centers.partition_point(|&x| x <= phi_k);
    if j == 0 {
        out[0] = (1.0 - (centers[0] - phi_k) / delta).max(0.0);
        return;
    }
    let lo = j - 1;
    // a value within round-off of a centre (0.3 vs 3 * 0.1) is that centre
    if lo + 1 < centers.len() && (centers[lo + 1] - phi_k).abs() <= SNAP * delta {
        out[lo + 1] = 1.0;
        return;
    }
    let u = (1.0 - (phi_k - centers[lo]) / delta).max(0.0);
    if u >= 1.0 - SNAP {
        out[lo] = 1.0;
        return;
    }
    out[lo] = u;
    if lo + 1 < centers.len() && u > 0.0 && u < 1.0 {
        out[lo + 1] = 1.0 - u;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        let c = bin_centers();
        let u = cxi_encode(0.3, &c, DELTA);
        assert!(u.iter().enumerate().all(|(j, &v)| v == if j == 3 { 1.0 } else { 0.0 }));

        let u = cxi_encode(0.35, &c, DELTA);
        assert!((u[3] - 0.5).abs() < 1e-12 && (u[4] - 0.5).abs() < 1e-12);

        let u = cxi_encode(0.0, &c, DELTA);
        assert_eq!(u[0], 1.0);
        assert!(u[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_plain_hat_formula() {
        let c = bin_centers();
        for i in 0..=1000 {
            let phi = i as f64 / 1000.0;
            let u = cxi_encode(phi, &c, DELTA);
            for (j, &x) in c.iter().enumerate() {
                let hat = (1.0 - (x - phi).abs() / DELTA).max(0.0);
                assert!((u[j] - hat).abs() < 1e-12, "{phi} {j}");
            }
        }
    }
}
