use crate::math::sqrt;
use crate::seqcore::AlignmentPath;
use crate::{Error, Result};

/// `Σ_i min_j ‖p_i − q_j‖` over the index points of two paths.
pub fn directed_distance(from: &AlignmentPath, to: &AlignmentPath) -> f64 {
    from.steps()
        .iter()
        .map(|&(i, j)| {
            to.steps()
                .iter()
                .map(|&(k, l)| {
                    let di = i as f64 - k as f64;
                    let dj = j as f64 - l as f64;
                    di * di + dj * dj
                })
                .fold(f64::INFINITY, f64::min)
        })
        .map(sqrt)
        .sum()
}

/// Symmetrized nearest-point distance between two paths, normalized by the
/// total number of steps.
pub fn alignment_error(truth: &AlignmentPath, estimate: &AlignmentPath) -> Result<f64> {
    let (Some(a), Some(b)) = (truth.grid(), estimate.grid()) else {
        return Err(Error::invalid("alignment error needs non-empty paths"));
    };
    if a != b {
        return Err(Error::GridMismatch { left: a, right: b });
    }
    let total = directed_distance(truth, estimate) + directed_distance(estimate, truth);
    Ok(total / (truth.len() + estimate.len()) as f64)
}
