//! K-fold cross-validation of the ridge objective over a candidate grid.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{select_centers, solve_ratio, KernelFeatures, KernelParams, RatioFitProblem};
use crate::seqcore::AlignedPairs;
use crate::{Error, Result};

/// Candidates whose score is within this of the minimum count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvCandidate {
    pub params: KernelParams,
    /// Mean held-out `½ αᵀ Ĥ α − ĥᵀ α` over the folds.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub grid: Vec<CvCandidate>,
    /// Index into `grid` of the selected candidate.
    pub selected: usize,
    pub folds: usize,
}

impl CvReport {
    pub fn selected(&self) -> &CvCandidate {
        &self.grid[self.selected]
    }
}

/// Fold index of every pair: a seeded shuffle of `0..m`, dealt round-robin.
pub fn fold_assignment(m: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = alloc::vec![0; m];
    for (pos, &idx) in perm.iter().enumerate() {
        fold_of[idx] = pos % folds;
    }
    fold_of
}

struct FoldData {
    train: AlignedPairs,
    centers: AlignedPairs,
    hold: AlignedPairs,
}

/// Scores every candidate by K-fold CV and selects the minimum.
///
/// Centers for each fold are strided from that fold's training pairs only
/// (at most `center_cap` of them) and are shared by the held-out `Ĥ`, `ĥ`.
/// Ties within 1e-12 go to the larger `λ`, then larger `σ_x`, then larger
/// `σ_y`.
pub fn cross_validate(
    pairs: &AlignedPairs,
    grid: &[KernelParams],
    folds: usize,
    seed: u64,
    center_cap: usize,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyper-parameter grid"));
    }
    if folds < 2 {
        return Err(Error::invalid(alloc::format!("need at least 2 folds, got {folds}")));
    }
    let m = pairs.len();
    if m < folds {
        return Err(Error::invalid(alloc::format!(
            "{m} pairs cannot fill {folds} folds"
        )));
    }

    let fold_of = fold_assignment(m, folds, seed);
    let fold_data: Vec<FoldData> = (0..folds)
        .map(|k| {
            let (hold_idx, train_idx): (Vec<usize>, Vec<usize>) =
                (0..m).partition(|&t| fold_of[t] == k);
            let train = pairs.select(&train_idx);
            let centers = select_centers(&train, center_cap);
            FoldData {
                hold: pairs.select(&hold_idx),
                train,
                centers,
            }
        })
        .collect();

    // kernel matrices depend only on the widths; share them across λ values
    let mut cache: Vec<((u64, u64), Vec<(RatioFitProblem, RatioFitProblem)>)> = Vec::new();
    let mut scored = Vec::with_capacity(grid.len());
    for params in grid {
        let key = (params.sigma_x.to_bits(), params.sigma_y.to_bits());
        let slot = match cache.iter().position(|(k, _)| *k == key) {
            Some(s) => s,
            None => {
                let problems = fold_data
                    .iter()
                    .map(|f| {
                        let train = KernelFeatures::new(&f.train, &f.centers, params)?.problem();
                        let hold = KernelFeatures::new(&f.hold, &f.centers, params)?.problem();
                        Ok((train, hold))
                    })
                    .collect::<Result<Vec<_>>>()?;
                cache.push((key, problems));
                cache.len() - 1
            }
        };
        let mut total = 0.0;
        for (train, hold) in &cache[slot].1 {
            let sol = solve_ratio(train, params.lambda)?;
            total += hold.objective(&sol.alpha);
        }
        let score = total / folds as f64;
        if !score.is_finite() {
            return Err(Error::NonFinite("cross-validation score"));
        }
        scored.push(CvCandidate {
            params: *params,
            score,
        });
    }

    let best = scored.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
    let selected = (0..scored.len())
        .filter(|&i| scored[i].score - best <= TIE_TOLERANCE)
        .max_by(|&a, &b| {
            let (pa, pb) = (scored[a].params, scored[b].params);
            pa.lambda
                .total_cmp(&pb.lambda)
                .then(pa.sigma_x.total_cmp(&pb.sigma_x))
                .then(pa.sigma_y.total_cmp(&pb.sigma_y))
                // earliest grid entry wins exact duplicates
                .then(b.cmp(&a))
        })
        .expect("grid is non-empty");

    Ok(CvReport {
        grid: scored,
        selected,
        folds,
    })
}
