//! Dynamic programming over alignment paths.
//!
//! Both engines fill an `n_x × n_y` accumulation table where each cell
//! extends the best of its diagonal, upper (`x` advanced) and left (`y`
//! advanced) neighbours, then backtrack from the last cell. Ties go to the
//! diagonal, then up, then left.

use alloc::vec::Vec;

use crate::math::sq_dist;
use crate::seqcore::{AlignmentPath, Sequence};
use crate::{Error, Result};

/// Per-cell scores `r(x_i, y_j)` on the full index grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    values: Vec<f64>,
    n_x: usize,
    n_y: usize,
}

impl RewardMatrix {
    pub fn new(values: Vec<f64>, n_x: usize, n_y: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 || values.len() != n_x * n_y {
            return Err(Error::invalid(alloc::format!(
                "reward matrix of shape {n_x}x{n_y} needs {} values, got {}",
                n_x * n_y,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reward matrix"));
        }
        Ok(Self { values, n_x, n_y })
    }

    pub fn from_fn(n_x: usize, n_y: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n_x * n_y);
        for i in 0..n_x {
            for j in 0..n_y {
                values.push(f(i, j));
            }
        }
        Self::new(values, n_x, n_y)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_y + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Sum of the entries visited by `path`.
    pub fn path_sum(&self, path: &AlignmentPath) -> f64 {
        path.steps().iter().map(|&(i, j)| self.get(i, j)).sum()
    }
}

/// Back-pointer of a DP cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Start,
    Diag,
    /// From `(i-1, j)`: `x` advanced.
    Up,
    /// From `(i, j-1)`: `y` advanced.
    Left,
}

/// Accumulated objective and back-pointers.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    pub accum: Vec<f64>,
    pub steps: Vec<Step>,
    pub n_x: usize,
    pub n_y: usize,
}

impl DpTable {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.accum[i * self.n_y + j]
    }

    /// Objective at the final cell.
    pub fn total(&self) -> f64 {
        self.accum[self.n_x * self.n_y - 1]
    }

    /// Follows back-pointers from `(n_x-1, n_y-1)` to `(0, 0)`.
    pub fn backtrack(&self) -> AlignmentPath {
        let (mut i, mut j) = (self.n_x - 1, self.n_y - 1);
        let mut steps = Vec::with_capacity(self.n_x + self.n_y - 1);
        steps.push((i, j));
        loop {
            match self.steps[i * self.n_y + j] {
                Step::Start => break,
                Step::Diag => {
                    i -= 1;
                    j -= 1;
                }
                Step::Up => i -= 1,
                Step::Left => j -= 1,
            }
            steps.push((i, j));
        }
        steps.reverse();
        AlignmentPath::from_steps(steps)
    }
}

/// Fills the table for `cell(i, j)` scores; `prefer(a, b)` is true when `a`
/// is strictly better than `b`.
fn fill(n_x: usize, n_y: usize, cell: impl Fn(usize, usize) -> f64, prefer: impl Fn(f64, f64) -> bool) -> DpTable {
    let mut accum = alloc::vec![0.0; n_x * n_y];
    let mut steps = alloc::vec![Step::Start; n_x * n_y];
    for i in 0..n_x {
        for j in 0..n_y {
            let here = i * n_y + j;
            if i == 0 && j == 0 {
                accum[here] = cell(0, 0);
                continue;
            }
            let mut best: Option<(f64, Step)> = None;
            let mut consider = |value: f64, step: Step| match best {
                Some((b, _)) if !prefer(value, b) => {}
                _ => best = Some((value, step)),
            };
            if i > 0 && j > 0 {
                consider(accum[here - n_y - 1], Step::Diag);
            }
            if i > 0 {
                consider(accum[here - n_y], Step::Up);
            }
            if j > 0 {
                consider(accum[here - 1], Step::Left);
            }
            let (prev, step) = best.expect("non-origin cell has a predecessor");
            accum[here] = prev + cell(i, j);
            steps[here] = step;
        }
    }
    DpTable {
        accum,
        steps,
        n_x,
        n_y,
    }
}

/// Table for the reward-maximizing recursion
/// `A(i,j) = max{A(i-1,j-1), A(i-1,j), A(i,j-1)} + r(i,j)`, `A(0,0) = r(0,0)`.
pub fn reward_table(rewards: &RewardMatrix) -> DpTable {
    fill(rewards.n_x, rewards.n_y, |i, j| rewards.get(i, j), |a, b| a > b)
}

/// Path maximizing the summed rewards, and that sum.
pub fn reward_dp(rewards: &RewardMatrix) -> (AlignmentPath, f64) {
    let table = reward_table(rewards);
    (table.backtrack(), table.total())
}

/// Table for classical DTW on a precomputed cost grid.
pub fn cost_table(costs: &RewardMatrix) -> DpTable {
    fill(costs.n_x, costs.n_y, |i, j| costs.get(i, j), |a, b| a < b)
}

/// Squared Euclidean distances between every `x` row and every `y` row.
pub fn squared_distance_grid(x: &Sequence, y: &Sequence) -> Result<RewardMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            x: x.dim(),
            y: y.dim(),
        });
    }
    RewardMatrix::from_fn(x.len(), y.len(), |i, j| sq_dist(x.row(i), y.row(j)))
}

/// Classical DTW: the path minimizing `Σ ‖x_i − y_j‖²` and the minimum.
pub fn dtw_align(x: &Sequence, y: &Sequence) -> Result<(AlignmentPath, f64)> {
    let table = cost_table(&squared_distance_grid(x, y)?);
    Ok((table.backtrack(), table.total()))
}

/// The DP objective normalized as `A / (2(n_x + n_y)) − 1/2`.
///
/// Reporting only: candidate paths are always re-scored with the SMI
/// estimate at their true length.
pub fn appendix_smi_score(total_reward: f64, n_x: usize, n_y: usize) -> f64 {
    total_reward / (2.0 * (n_x + n_y) as f64) - 0.5
}
