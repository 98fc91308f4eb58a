//! Least-squares estimation of squared-loss mutual information.
//!
//! The density ratio `p(x,y) / (p(x) p(y))` is modeled as
//! `r(x, y) = Σ_ℓ α_ℓ K(x, xc_ℓ) L(y, yc_ℓ)` with Gaussian `K`, `L` and
//! kernel centers `(xc_ℓ, yc_ℓ)` taken from the aligned pairs. The
//! coefficients solve the ridge system `(Ĥ + λI) α = ĥ`, and the SMI estimate
//! is the empirical mean of `r` over the pairs, halved, minus one half.

mod cv;
mod kernel;
mod linalg;

use alloc::vec::Vec;

pub use cv::{cross_validate, fold_assignment, CvCandidate, CvReport};
pub use kernel::{
    default_grid, gaussian_kernel, grid_from_bandwidths, median_bandwidth, width_multipliers,
    KernelParams, RIDGE_GRID,
};

use crate::seqcore::AlignedPairs;
use crate::{Error, Result};
pub(crate) use kernel::{gaussian, inv_two_sigma_sq};
use linalg::{cholesky, cholesky_solve, dot, mat_vec, norm};

/// Default cap on the number of kernel centers.
pub const DEFAULT_CENTER_CAP: usize = 100;

/// How many times a failed factorization retries with `λ × 10`.
pub const MAX_RIDGE_ESCALATIONS: usize = 3;

/// Fitted density-ratio model.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    pub centers: AlignedPairs,
    pub alpha: Vec<f64>,
    /// Parameters used for the fit. `lambda` is the value actually used,
    /// which differs from the requested one after ridge escalation.
    pub params: KernelParams,
}

impl RatioModel {
    pub fn new(centers: AlignedPairs, alpha: Vec<f64>, params: KernelParams) -> Result<Self> {
        if centers.is_empty() || centers.len() != alpha.len() {
            return Err(Error::invalid(alloc::format!(
                "{} centers but {} coefficients",
                centers.len(),
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("ratio coefficients"));
        }
        Ok(Self {
            centers,
            alpha,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `r(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let gx = inv_two_sigma_sq(self.params.sigma_x);
        let gy = inv_two_sigma_sq(self.params.sigma_y);
        self.centers
            .iter()
            .zip(&self.alpha)
            .map(|((cx, cy), a)| a * gaussian(x, cx, gx) * gaussian(y, cy, gy))
            .sum()
    }
}

/// Empirical `Ĥ` (row-major `l × l`) and `ĥ` of the ridge objective.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioFitProblem {
    pub h: Vec<f64>,
    pub big_h: Vec<f64>,
    pub l: usize,
}

impl RatioFitProblem {
    pub fn new(h: Vec<f64>, big_h: Vec<f64>) -> Result<Self> {
        let l = h.len();
        if l == 0 || big_h.len() != l * l {
            return Err(Error::invalid("fit problem needs h of length l and H of size l x l"));
        }
        Ok(Self { h, big_h, l })
    }

    /// `½ αᵀ Ĥ α − ĥᵀ α`.
    pub fn objective(&self, alpha: &[f64]) -> f64 {
        0.5 * dot(alpha, &mat_vec(&self.big_h, self.l, alpha)) - dot(&self.h, alpha)
    }

    /// `‖(Ĥ + λI) α − ĥ‖`.
    pub fn residual(&self, alpha: &[f64], lambda: f64) -> f64 {
        let mut r = mat_vec(&self.big_h, self.l, alpha);
        for ((ri, ai), hi) in r.iter_mut().zip(alpha).zip(&self.h) {
            *ri += lambda * ai - hi;
        }
        norm(&r)
    }
}

/// Kernel evaluations of pairs against centers, stored column-major
/// (`gk[ℓ·m + i] = K(x_i, xc_ℓ)`).
pub(crate) struct KernelFeatures {
    gk: Vec<f64>,
    gl: Vec<f64>,
    m: usize,
    l: usize,
}

impl KernelFeatures {
    pub(crate) fn new(pairs: &AlignedPairs, centers: &AlignedPairs, params: &KernelParams) -> Result<Self> {
        if pairs.dims() != centers.dims() {
            let (dx, dy) = pairs.dims();
            let (cx, cy) = centers.dims();
            return Err(Error::invalid(alloc::format!(
                "pairs have dims ({dx}, {dy}) but centers have ({cx}, {cy})"
            )));
        }
        let (m, l) = (pairs.len(), centers.len());
        let gx = inv_two_sigma_sq(params.sigma_x);
        let gy = inv_two_sigma_sq(params.sigma_y);
        let mut gk = Vec::with_capacity(m * l);
        let mut gl = Vec::with_capacity(m * l);
        for c in 0..l {
            let (cx, cy) = (centers.x(c), centers.y(c));
            for i in 0..m {
                gk.push(gaussian(pairs.x(i), cx, gx));
                gl.push(gaussian(pairs.y(i), cy, gy));
            }
        }
        if gk.iter().chain(&gl).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel evaluations"));
        }
        Ok(Self { gk, gl, m, l })
    }

    fn col_k(&self, c: usize) -> &[f64] {
        &self.gk[c * self.m..(c + 1) * self.m]
    }

    fn col_l(&self, c: usize) -> &[f64] {
        &self.gl[c * self.m..(c + 1) * self.m]
    }

    /// `Ĥ = (G_Kᵀ G_K) ∘ (G_Lᵀ G_L) / m²`, `ĥ_ℓ = (1/m) Σ_i G_K[i,ℓ] G_L[i,ℓ]`.
    pub(crate) fn problem(&self) -> RatioFitProblem {
        let (m, l) = (self.m as f64, self.l);
        let mut big_h = alloc::vec![0.0; l * l];
        for a in 0..l {
            for b in a..l {
                let v = dot(self.col_k(a), self.col_k(b)) * dot(self.col_l(a), self.col_l(b)) / (m * m);
                big_h[a * l + b] = v;
                big_h[b * l + a] = v;
            }
        }
        let h = (0..l).map(|c| dot(self.col_k(c), self.col_l(c)) / m).collect();
        RatioFitProblem { h, big_h, l }
    }
}

/// Builds `Ĥ` and `ĥ` for `pairs` against kernel `centers`.
pub fn build_fit_problem(
    pairs: &AlignedPairs,
    centers: &AlignedPairs,
    params: &KernelParams,
) -> Result<RatioFitProblem> {
    if pairs.is_empty() || centers.is_empty() {
        return Err(Error::invalid("fit problem needs at least one pair and one center"));
    }
    Ok(KernelFeatures::new(pairs, centers, params)?.problem())
}

/// Solution of the ridge system and the `λ` that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub alpha: Vec<f64>,
    pub lambda: f64,
}

/// `α̂ = (Ĥ + λI)⁻¹ ĥ` by Cholesky. A failed factorization retries with
/// `λ × 10` up to [`MAX_RIDGE_ESCALATIONS`] times; a zero `λ` first
/// escalates to `1e-10 × mean(diag Ĥ)`.
pub fn solve_ratio(problem: &RatioFitProblem, lambda: f64) -> Result<RidgeSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("ridge parameter must be finite and non-negative"));
    }
    if problem.h.iter().chain(&problem.big_h).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit problem"));
    }
    let l = problem.l;
    let mut lam = lambda;
    for attempt in 0..=MAX_RIDGE_ESCALATIONS {
        let mut a = problem.big_h.clone();
        for i in 0..l {
            a[i * l + i] += lam;
        }
        if let Some(factor) = cholesky(&a, l) {
            let mut alpha = cholesky_solve(&factor, l, &problem.h);
            // one step of iterative refinement
            let ax = mat_vec(&a, l, &alpha);
            let r: Vec<f64> = problem.h.iter().zip(&ax).map(|(h, v)| h - v).collect();
            let dx = cholesky_solve(&factor, l, &r);
            for (ai, di) in alpha.iter_mut().zip(&dx) {
                *ai += di;
            }
            if alpha.iter().all(|v| v.is_finite()) {
                return Ok(RidgeSolution { alpha, lambda: lam });
            }
        }
        if attempt == MAX_RIDGE_ESCALATIONS {
            break;
        }
        lam = if lam > 0.0 {
            lam * 10.0
        } else {
            let trace: f64 = (0..l).map(|i| problem.big_h[i * l + i]).sum();
            1e-10 * (trace / l as f64).max(f64::MIN_POSITIVE)
        };
    }
    Err(Error::NotPositiveDefinite { lambda: lam })
}

/// `l` indices spread uniformly over `0..m`: `⌊t·m/l⌋`.
pub fn stride_indices(m: usize, l: usize) -> Vec<usize> {
    let l = l.min(m);
    (0..l).map(|t| t * m / l).collect()
}

/// Kernel centers for `pairs`: `min(m, cap)` pairs chosen by uniform striding.
pub fn select_centers(pairs: &AlignedPairs, cap: usize) -> AlignedPairs {
    pairs.select(&stride_indices(pairs.len(), cap.max(1)))
}

/// A fitted model together with its in-sample SMI estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedRatio {
    pub model: RatioModel,
    pub smi: SmiEstimate,
}

/// Fits the ratio model on `pairs` with strided centers and scores it on the
/// same pairs.
pub fn fit_ratio(pairs: &AlignedPairs, params: &KernelParams, center_cap: usize) -> Result<FittedRatio> {
    if pairs.is_empty() {
        return Err(Error::invalid("cannot fit a ratio model on zero pairs"));
    }
    let centers = select_centers(pairs, center_cap);
    let problem = KernelFeatures::new(pairs, &centers, params)?.problem();
    let sol = solve_ratio(&problem, params.lambda)?;
    // (1/m) Σ_i r(x_i, y_i) = ĥᵀ α̂ on the fitting pairs
    let mean_ratio = dot(&problem.h, &sol.alpha);
    let params = KernelParams {
        lambda: sol.lambda,
        ..*params
    };
    let model = RatioModel::new(centers, sol.alpha, params)?;
    Ok(FittedRatio {
        model,
        smi: SmiEstimate {
            value: 0.5 * mean_ratio - 0.5,
            m: pairs.len(),
        },
    })
}

/// Squared-loss mutual information estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmiEstimate {
    pub value: f64,
    pub m: usize,
}

/// `(1/2m) Σ_i r(x_i, y_i) − 1/2`, reported without clipping.
pub fn smi_estimate(pairs: &AlignedPairs, model: &RatioModel) -> Result<SmiEstimate> {
    if pairs.is_empty() {
        return Err(Error::invalid("SMI needs at least one pair"));
    }
    let m = pairs.len();
    let total: f64 = pairs.iter().map(|(x, y)| model.eval(x, y)).sum();
    let value = total / (2.0 * m as f64) - 0.5;
    if !value.is_finite() {
        return Err(Error::NonFinite("SMI estimate"));
    }
    Ok(SmiEstimate { value, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Sequence;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs_1d(xs: &[f64], ys: &[f64]) -> AlignedPairs {
        AlignedPairs::from_parallel(
            &Sequence::from_scalars(xs).unwrap(),
            &Sequence::from_scalars(ys).unwrap(),
        )
        .unwrap()
    }

    fn random_pairs(rng: &mut ChaCha8Rng, m: usize, dx: usize, dy: usize) -> AlignedPairs {
        let xs: Vec<f64> = (0..m * dx).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = (0..m * dy).map(|_| rng.random_range(-2.0..2.0)).collect();
        AlignedPairs::from_parallel(
            &Sequence::new(xs, m, dx).unwrap(),
            &Sequence::new(ys, m, dy).unwrap(),
        )
        .unwrap()
    }

    /// Direct double-sum definition of `Ĥ` and `ĥ`.
    fn naive_problem(pairs: &AlignedPairs, centers: &AlignedPairs, p: &KernelParams) -> (Vec<f64>, Vec<f64>) {
        let k = |a: &[f64], b: &[f64]| gaussian_kernel(a, b, p.sigma_x).unwrap();
        let lk = |a: &[f64], b: &[f64]| gaussian_kernel(a, b, p.sigma_y).unwrap();
        let (m, l) = (pairs.len(), centers.len());
        let mut big_h = vec![0.0; l * l];
        for a in 0..l {
            for b in 0..l {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        s += k(pairs.x(i), centers.x(a))
                            * lk(pairs.y(j), centers.y(a))
                            * k(pairs.x(i), centers.x(b))
                            * lk(pairs.y(j), centers.y(b));
                    }
                }
                big_h[a * l + b] = s / (m * m) as f64;
            }
        }
        let h = (0..l)
            .map(|a| {
                (0..m)
                    .map(|i| k(pairs.x(i), centers.x(a)) * lk(pairs.y(i), centers.y(a)))
                    .sum::<f64>()
                    / m as f64
            })
            .collect();
        (h, big_h)
    }

    #[test]
    fn single_pair_problem_is_one() {
        let pairs = pairs_1d(&[0.4], &[-1.0]);
        let p = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let prob = build_fit_problem(&pairs, &pairs, &p).unwrap();
        assert_eq!(prob.big_h, vec![1.0]);
        assert_eq!(prob.h, vec![1.0]);
    }

    #[test]
    fn wide_kernels_give_all_ones() {
        let pairs = pairs_1d(&[0.0, 1.0, 2.5], &[3.0, -1.0, 0.5]);
        let p = KernelParams::new(1e8, 1e8, 0.1).unwrap();
        let prob = build_fit_problem(&pairs, &pairs, &p).unwrap();
        assert!(prob.big_h.iter().chain(&prob.h).all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_pair_problem_matches_double_sum() {
        let pairs = pairs_1d(&[0.0, 1.0], &[0.0, 1.0]);
        let p = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let prob = build_fit_problem(&pairs, &pairs, &p).unwrap();
        let (h, big_h) = naive_problem(&pairs, &pairs, &p);
        for (a, b) in prob.h.iter().zip(&h).chain(prob.big_h.iter().zip(&big_h)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // hand value: Ĥ[0,0] = (1/4)(1 + e^-1/2)², ĥ[0] = (1 + e^-1)/2
        let e = (-0.5f64).exp();
        assert_abs_diff_eq!(prob.big_h[0], 0.25 * (1.0 + e * e) * (1.0 + e * e), epsilon = 1e-15);
        assert_abs_diff_eq!(prob.h[0], 0.5 * (1.0 + e * e), epsilon = 1e-15);
    }

    #[test]
    fn scalar_and_diagonal_solves() {
        let prob = RatioFitProblem::new(vec![1.0], vec![1.0]).unwrap();
        let s = solve_ratio(&prob, 0.1).unwrap();
        assert_abs_diff_eq!(s.alpha[0], 1.0 / 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha[0], 0.909091, epsilon = 1e-6);

        let prob = RatioFitProblem::new(vec![2.0, 4.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = solve_ratio(&prob, 1.0).unwrap();
        assert_abs_diff_eq!(s.alpha[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn random_spd_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = nalgebra::DMatrix::<f64>::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let spd = &b * b.transpose() + nalgebra::DMatrix::<f64>::identity(5, 5) * 0.5;
        let h = nalgebra::DVector::<f64>::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
        let lambda = 0.01;
        let oracle = (&spd + nalgebra::DMatrix::<f64>::identity(5, 5) * lambda)
            .lu()
            .solve(&h)
            .unwrap();
        let big_h: Vec<f64> = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).map(|(i, j)| spd[(i, j)]).collect();
        let prob = RatioFitProblem::new(h.iter().copied().collect(), big_h).unwrap();
        let s = solve_ratio(&prob, lambda).unwrap();
        for (a, b) in s.alpha.iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        assert!(prob.residual(&s.alpha, lambda) <= 1e-8 * norm(&prob.h));
    }

    #[test]
    fn escalation_then_hard_error() {
        // indefinite: eigenvalues 3.5 and -1.5; λ = 0.01 → 0.1 → 1 → 10 succeeds
        let prob = RatioFitProblem::new(vec![1.0, 0.0], vec![1.0, 2.5, 2.5, 1.0]).unwrap();
        let s = solve_ratio(&prob, 0.01).unwrap();
        assert_abs_diff_eq!(s.lambda, 10.0, epsilon = 1e-12);
        // eigenvalue -100 needs more than three escalations from 0.01
        let prob = RatioFitProblem::new(vec![1.0], vec![-100.0]).unwrap();
        assert!(matches!(solve_ratio(&prob, 0.01), Err(Error::NotPositiveDefinite { .. })));
        // zero λ on a singular PSD matrix recovers through the relative floor
        let prob = RatioFitProblem::new(vec![1.0, 1.0], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let s = solve_ratio(&prob, 0.0).unwrap();
        assert!(s.lambda > 0.0);
    }

    #[test]
    fn single_pair_smi_closed_form() {
        let pairs = pairs_1d(&[0.3], &[0.7]);
        let p = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let fitted = fit_ratio(&pairs, &p, DEFAULT_CENTER_CAP).unwrap();
        let direct = smi_estimate(&pairs, &fitted.model).unwrap();
        assert_abs_diff_eq!(direct.value, 0.5 / 1.1 - 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(direct.value, -0.045455, epsilon = 1e-6);
        assert_abs_diff_eq!(fitted.smi.value, direct.value, epsilon = 1e-12);
    }

    #[test]
    fn zero_model_gives_minus_half() {
        let pairs = pairs_1d(&[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0]);
        let p = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let model = RatioModel::new(pairs.clone(), vec![0.0; 3], p).unwrap();
        assert_eq!(smi_estimate(&pairs, &model).unwrap().value, -0.5);
    }

    #[test]
    fn stride_is_uniform_and_capped() {
        assert_eq!(stride_indices(10, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(stride_indices(3, 100), vec![0, 1, 2]);
        assert_eq!(stride_indices(7, 3), vec![0, 2, 4]);
    }

    #[test]
    fn ridge_shrinks_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs = random_pairs(&mut rng, 30, 2, 1);
        let p = KernelParams::new(0.8, 0.6, 0.0).unwrap();
        let prob = build_fit_problem(&pairs, &pairs, &p).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let n = norm(&solve_ratio(&prob, lambda).unwrap().alpha);
            assert!(n <= prev + 1e-12, "norm grew at λ = {lambda}");
            prev = n;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn factorized_matches_double_sum(seed in any::<u64>(), m in 1usize..=20, l in 1usize..=20, dx in 1usize..3, dy in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = random_pairs(&mut rng, m, dx, dy);
            let centers = random_pairs(&mut rng, l, dx, dy);
            let p = KernelParams::new(rng.random_range(0.3..2.0), rng.random_range(0.3..2.0), 0.1).unwrap();
            let prob = build_fit_problem(&pairs, &centers, &p).unwrap();
            let (h, big_h) = naive_problem(&pairs, &centers, &p);
            for (a, b) in prob.h.iter().zip(&h).chain(prob.big_h.iter().zip(&big_h)) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) || (a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn smi_invariant_under_common_permutation(seed in any::<u64>(), m in 2usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = random_pairs(&mut rng, m, 1, 2);
            let mut perm: Vec<usize> = (0..m).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let shuffled = pairs.select(&perm);
            let p = KernelParams::new(0.7, 0.9, 0.05).unwrap();
            let a = fit_ratio(&pairs, &p, m).unwrap();
            let b = fit_ratio(&shuffled, &p, m).unwrap();
            prop_assert!((a.smi.value - b.smi.value).abs() < 1e-9);
            let direct = smi_estimate(&shuffled, &b.model).unwrap();
            prop_assert!((direct.value - b.smi.value).abs() < 1e-9);
        }
    }
}
