use alloc::vec::Vec;

use crate::math::{exp, median, sq_dist, sqrt};
use crate::{Error, Result, Sequence};

/// Gaussian widths for the `x` and `y` kernels and the ridge strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub lambda: f64,
}

impl KernelParams {
    pub fn new(sigma_x: f64, sigma_y: f64, lambda: f64) -> Result<Self> {
        let ok = sigma_x.is_finite()
            && sigma_y.is_finite()
            && lambda.is_finite()
            && sigma_x > 0.0
            && sigma_y > 0.0
            && lambda >= 0.0;
        if !ok {
            return Err(Error::invalid(alloc::format!(
                "kernel parameters need sigma > 0 and lambda >= 0, got ({sigma_x}, {sigma_y}, {lambda})"
            )));
        }
        Ok(Self {
            sigma_x,
            sigma_y,
            lambda,
        })
    }
}

/// `exp(-‖u - v‖² / (2σ²))`.
pub fn gaussian_kernel(u: &[f64], v: &[f64], sigma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            x: u.len(),
            y: v.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("kernel width must be positive"));
    }
    Ok(gaussian(u, v, inv_two_sigma_sq(sigma)))
}

#[inline]
pub(crate) fn inv_two_sigma_sq(sigma: f64) -> f64 {
    1.0 / (2.0 * sigma * sigma)
}

#[inline]
pub(crate) fn gaussian(u: &[f64], v: &[f64], inv_two_sigma_sq: f64) -> f64 {
    exp(-sq_dist(u, v) * inv_two_sigma_sq)
}

/// Median heuristic: `2^{-1/2}` times the median Euclidean distance over
/// unordered row pairs `i < j`.
pub fn median_bandwidth(seq: &Sequence) -> Result<f64> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::DegenerateBandwidth);
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(sqrt(sq_dist(seq.row(i), seq.row(j))));
        }
    }
    let med = median(&mut dists);
    if !(med > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(med * core::f64::consts::FRAC_1_SQRT_2)
}

/// Width multipliers `c = k^{-1/2}` for `k = 2.0, 1.8, …, 0.2`.
pub fn width_multipliers() -> [f64; 10] {
    core::array::from_fn(|t| {
        let k = (20 - 2 * t) as f64 / 10.0;
        1.0 / sqrt(k)
    })
}

pub const RIDGE_GRID: [f64; 2] = [1e-1, 1e-2];

/// The 20-candidate grid around median bandwidths `(m_x, m_y)`.
pub fn grid_from_bandwidths(m_x: f64, m_y: f64) -> Vec<KernelParams> {
    let mut grid = Vec::with_capacity(20);
    for c in width_multipliers() {
        for lambda in RIDGE_GRID {
            grid.push(KernelParams {
                sigma_x: c * m_x,
                sigma_y: c * m_y,
                lambda,
            });
        }
    }
    grid
}

pub fn default_grid(x: &Sequence, y: &Sequence) -> Result<Vec<KernelParams>> {
    Ok(grid_from_bandwidths(median_bandwidth(x)?, median_bandwidth(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_kernel(&[1.5, -2.0], &[1.5, -2.0], 0.3).unwrap(), 1.0);
        // ‖u - v‖² = 2σ² with σ = 1
        let k = gaussian_kernel(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap();
        assert_abs_diff_eq!(k, 0.367879, epsilon = 1e-6);
        let k = gaussian_kernel(&[0.0], &[3.0], 1.0).unwrap();
        assert_abs_diff_eq!(k, 0.011109, epsilon = 1e-6);
    }

    #[test]
    fn kernel_rejects_mismatch() {
        assert!(matches!(
            gaussian_kernel(&[0.0], &[0.0, 1.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(gaussian_kernel(&[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn median_heuristic_examples() {
        let s = Sequence::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(median_bandwidth(&s).unwrap(), 0.707107, epsilon = 1e-6);
        let s = Sequence::from_scalars(&[0.0, 2.0]).unwrap();
        assert_abs_diff_eq!(median_bandwidth(&s).unwrap(), 1.414214, epsilon = 1e-6);
        let s = Sequence::from_scalars(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(median_bandwidth(&s), Err(Error::DegenerateBandwidth));
        let s = Sequence::from_scalars(&[4.0]).unwrap();
        assert_eq!(median_bandwidth(&s), Err(Error::DegenerateBandwidth));
    }

    #[test]
    fn median_heuristic_matches_brute_force() {
        // brute force over ordered pairs with i != j gives the same multiset twice
        let vals: [f64; 6] = [0.3, -1.2, 4.0, 2.2, 0.0, 7.5];
        let mut d = alloc::vec::Vec::new();
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j {
                    d.push((vals[i] - vals[j]).abs());
                }
            }
        }
        d.sort_by(f64::total_cmp);
        let med = 0.5 * (d[d.len() / 2 - 1] + d[d.len() / 2]);
        let s = Sequence::from_scalars(&vals).unwrap();
        assert_abs_diff_eq!(median_bandwidth(&s).unwrap(), med / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn grid_shape_and_ranges() {
        let g = grid_from_bandwidths(1.0, 1.0);
        assert_eq!(g.len(), 20);
        assert!(g.iter().all(|p| p.lambda == 0.1 || p.lambda == 0.01));
        let smallest = g.iter().map(|p| p.sigma_x).fold(f64::INFINITY, f64::min);
        let largest = g.iter().map(|p| p.sigma_x).fold(0.0, f64::max);
        assert_abs_diff_eq!(smallest, 0.7071, epsilon = 1e-4);
        assert_abs_diff_eq!(largest, 2.2361, epsilon = 1e-4);
        assert!(g.iter().all(|p| p.sigma_x == p.sigma_y));
    }

    #[test]
    fn default_grid_propagates_degenerate() {
        let x = Sequence::from_scalars(&[1.0, 1.0]).unwrap();
        let y = Sequence::from_scalars(&[0.0, 1.0]).unwrap();
        assert_eq!(default_grid(&x, &y), Err(Error::DegenerateBandwidth));
        assert_eq!(default_grid(&y, &y).unwrap().len(), 20);
    }
}
