//! Least-squares dynamic time warping.
//!
//! Each iteration fits the density-ratio model on the pairs of the current
//! path, evaluates it on the full `n_x × n_y` grid, and lets the
//! reward-maximizing DP propose a new path. The proposal replaces the current
//! path only if its SMI estimate, refitted on its own pairs with the selected
//! kernel parameters, is strictly larger.

use alloc::vec::Vec;

use crate::ctw::{ctw_align, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS};
use crate::lsmi::{
    cross_validate, default_grid, fit_ratio, grid_from_bandwidths, median_bandwidth, FittedRatio,
    KernelParams, RatioModel, DEFAULT_CENTER_CAP,
};
use crate::lsmi::{gaussian, inv_two_sigma_sq};
use crate::seqcore::{gather_pairs, uniform_init, AlignedPairs, AlignmentPath, Sequence};
use crate::warp::{reward_dp, RewardMatrix};
use crate::{Error, Result};

/// Where the iteration starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// The better of the uniform and CTW paths by SMI estimate.
    Auto,
    Uniform,
    Ctw,
    Given(AlignmentPath),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitLabel {
    Uniform,
    Ctw,
    Given,
}

impl InitLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitLabel::Uniform => "uniform",
            InitLabel::Ctw => "ctw",
            InitLabel::Given => "given",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsdtwConfig {
    pub max_iterations: usize,
    /// Candidate kernel parameters; `None` uses the median-heuristic grid.
    pub grid: Option<Vec<KernelParams>>,
    pub cv_folds: usize,
    pub seed: u64,
    pub refit_cv_each_iteration: bool,
    pub center_cap: usize,
    pub init: InitStrategy,
    pub ctw_epsilon: f64,
    pub ctw_max_iterations: usize,
}

impl Default for LsdtwConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            grid: None,
            cv_folds: 3,
            seed: 0,
            refit_cv_each_iteration: false,
            center_cap: DEFAULT_CENTER_CAP,
            init: InitStrategy::Auto,
            ctw_epsilon: DEFAULT_EPSILON,
            ctw_max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl LsdtwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        if self.center_cap == 0 {
            return Err(Error::invalid("center_cap must be at least 1"));
        }
        if matches!(&self.grid, Some(g) if g.is_empty()) {
            return Err(Error::invalid("kernel grid is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub path: AlignmentPath,
    /// SMI estimate of the initial path followed by every accepted update.
    pub smi_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub selected_params: KernelParams,
    pub init_label: InitLabel,
    /// Set when CTW failed during initialization and uniform was used.
    pub ctw_failed: bool,
}

impl AlignmentResult {
    pub fn final_smi(&self) -> f64 {
        *self.smi_trace.last().expect("trace holds the initial state")
    }
}

/// Initial path with its selected parameters and fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct InitChoice {
    pub path: AlignmentPath,
    pub label: InitLabel,
    pub params: KernelParams,
    pub fitted: FittedRatio,
    pub ctw_failed: bool,
}

impl InitChoice {
    pub fn smi(&self) -> f64 {
        self.fitted.smi.value
    }
}

fn grid_for(x: &Sequence, y: &Sequence, config: &LsdtwConfig) -> Result<Vec<KernelParams>> {
    match &config.grid {
        Some(g) => Ok(g.clone()),
        None => default_grid(x, y),
    }
}

/// The candidate CV would pick on an exact tie: largest `λ`, then widths.
fn smoothest(grid: &[KernelParams]) -> KernelParams {
    *grid
        .iter()
        .max_by(|a, b| {
            a.lambda
                .total_cmp(&b.lambda)
                .then(a.sigma_x.total_cmp(&b.sigma_x))
                .then(a.sigma_y.total_cmp(&b.sigma_y))
        })
        .expect("grid is non-empty")
}

/// Selects kernel parameters for `pairs` by CV. With fewer pairs than folds
/// the fold count drops to the pair count; below two pairs the smoothest
/// candidate is used.
pub fn select_params(pairs: &AlignedPairs, grid: &[KernelParams], config: &LsdtwConfig) -> Result<KernelParams> {
    let folds = config.cv_folds.min(pairs.len());
    if folds < 2 {
        return Ok(smoothest(grid));
    }
    let report = cross_validate(pairs, grid, folds, config.seed, config.center_cap)?;
    Ok(report.selected().params)
}

struct Scored {
    params: KernelParams,
    fitted: FittedRatio,
}

fn score_path(x: &Sequence, y: &Sequence, path: &AlignmentPath, grid: &[KernelParams], config: &LsdtwConfig) -> Result<Scored> {
    let pairs = gather_pairs(x, y, path)?;
    let params = select_params(&pairs, grid, config)?;
    let fitted = fit_ratio(&pairs, &params, config.center_cap)?;
    Ok(Scored { params, fitted })
}

/// Picks the initial path. Under [`InitStrategy::Auto`] both the uniform and
/// the CTW path are scored with a CV-selected model and the larger SMI wins,
/// uniform on ties. A CTW failure falls back to uniform and sets
/// `ctw_failed`.
pub fn choose_init(x: &Sequence, y: &Sequence, config: &LsdtwConfig) -> Result<InitChoice> {
    config.validate()?;
    let grid = grid_for(x, y, config)?;
    choose_init_with_grid(x, y, config, &grid)
}

fn choose_init_with_grid(x: &Sequence, y: &Sequence, config: &LsdtwConfig, grid: &[KernelParams]) -> Result<InitChoice> {
    let choice = |path: AlignmentPath, label: InitLabel, ctw_failed: bool| -> Result<InitChoice> {
        let s = score_path(x, y, &path, grid, config)?;
        Ok(InitChoice {
            path,
            label,
            params: s.params,
            fitted: s.fitted,
            ctw_failed,
        })
    };
    let uniform = || uniform_init(x.len(), y.len());
    let ctw = || ctw_align(x, y, config.ctw_epsilon, config.ctw_max_iterations).map(|m| m.path);
    match &config.init {
        InitStrategy::Uniform => choice(uniform(), InitLabel::Uniform, false),
        InitStrategy::Given(path) => choice(path.clone(), InitLabel::Given, false),
        InitStrategy::Ctw => match ctw() {
            Ok(p) => choice(p, InitLabel::Ctw, false),
            Err(_) => choice(uniform(), InitLabel::Uniform, true),
        },
        InitStrategy::Auto => {
            let base = choice(uniform(), InitLabel::Uniform, false)?;
            let Ok(ctw_path) = ctw() else {
                return Ok(InitChoice {
                    ctw_failed: true,
                    ..base
                });
            };
            if ctw_path == base.path {
                return Ok(base);
            }
            let alt = choice(ctw_path, InitLabel::Ctw, false)?;
            Ok(if alt.smi() > base.smi() { alt } else { base })
        }
    }
}

/// `r(x_i, y_j)` for every grid cell, via
/// `r(i, j) = Σ_ℓ α_ℓ K(x_i, xc_ℓ) L(y_j, yc_ℓ)`.
pub fn evaluate_reward_grid(x: &Sequence, y: &Sequence, model: &RatioModel) -> Result<RewardMatrix> {
    let (dx, dy) = model.centers.dims();
    if x.dim() != dx || y.dim() != dy {
        return Err(Error::invalid(alloc::format!(
            "model expects dims ({dx}, {dy}), sequences have ({}, {})",
            x.dim(),
            y.dim()
        )));
    }
    let l = model.len();
    let gx = inv_two_sigma_sq(model.params.sigma_x);
    let gy = inv_two_sigma_sq(model.params.sigma_y);
    // weighted x features, row-major n_x × l
    let mut wk = Vec::with_capacity(x.len() * l);
    for row in x.rows() {
        for (c, a) in model.alpha.iter().enumerate() {
            wk.push(a * gaussian(row, model.centers.x(c), gx));
        }
    }
    let mut gl = Vec::with_capacity(y.len() * l);
    for row in y.rows() {
        for c in 0..l {
            gl.push(gaussian(row, model.centers.y(c), gy));
        }
    }
    RewardMatrix::from_fn(x.len(), y.len(), |i, j| {
        wk[i * l..(i + 1) * l]
            .iter()
            .zip(&gl[j * l..(j + 1) * l])
            .map(|(a, b)| a * b)
            .sum()
    })
}

fn forced_path_result(x: &Sequence, y: &Sequence, config: &LsdtwConfig) -> Result<AlignmentResult> {
    let path = uniform_init(x.len(), y.len());
    let grid = match &config.grid {
        Some(g) => g.clone(),
        None => {
            let bw = |s: &Sequence| median_bandwidth(s).unwrap_or(1.0);
            grid_from_bandwidths(bw(x), bw(y))
        }
    };
    let pairs = gather_pairs(x, y, &path)?;
    let params = select_params(&pairs, &grid, config)?;
    let fitted = fit_ratio(&pairs, &params, config.center_cap)?;
    Ok(AlignmentResult {
        path,
        smi_trace: alloc::vec![fitted.smi.value],
        iterations_run: 0,
        converged: true,
        selected_params: fitted.model.params,
        init_label: InitLabel::Uniform,
        ctw_failed: false,
    })
}

/// Aligns `x` and `y` by maximizing the SMI estimate of the aligned pairs.
///
/// Dimensions of `x` and `y` may differ. When either sequence has a single
/// sample the only valid path is returned without iterating.
pub fn lsdtw_align(x: &Sequence, y: &Sequence, config: &LsdtwConfig) -> Result<AlignmentResult> {
    config.validate()?;
    if x.len() == 1 || y.len() == 1 {
        return forced_path_result(x, y, config);
    }
    let grid = grid_for(x, y, config)?;
    let init = choose_init_with_grid(x, y, config, &grid)?;

    let mut params = init.params;
    let mut path = init.path;
    let mut current = init.fitted;
    let mut trace = alloc::vec![current.smi.value];
    let mut converged = false;
    let mut iterations_run = 0;

    for it in 1..=config.max_iterations {
        iterations_run = it;
        let step = || -> Result<Option<(AlignmentPath, FittedRatio, KernelParams)>> {
            let (params, current) = if config.refit_cv_each_iteration && it > 1 {
                let pairs = gather_pairs(x, y, &path)?;
                let p = select_params(&pairs, &grid, config)?;
                (p, fit_ratio(&pairs, &p, config.center_cap)?)
            } else {
                (params, current.clone())
            };
            let rewards = evaluate_reward_grid(x, y, &current.model)?;
            let (proposal, _) = reward_dp(&rewards);
            if proposal == path {
                return Ok(None);
            }
            let pairs = gather_pairs(x, y, &proposal)?;
            let fitted = fit_ratio(&pairs, &params, config.center_cap)?;
            // strict improvement over both the current path under the
            // parameters in force and the last accepted score
            let bar = current.smi.value.max(*trace.last().unwrap());
            Ok((fitted.smi.value > bar).then_some((proposal, fitted, params)))
        };
        match step().map_err(|e| e.at_iteration(it))? {
            Some((proposal, fitted, p)) => {
                trace.push(fitted.smi.value);
                path = proposal;
                current = fitted;
                params = p;
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    Ok(AlignmentResult {
        path,
        smi_trace: trace,
        iterations_run,
        converged,
        selected_params: current.model.params,
        init_label: init.label,
        ctw_failed: init.ctw_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::validate_path;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wave(n: usize, phase: f64) -> Sequence {
        let v: Vec<f64> = (0..n).map(|i| libm::sin(i as f64 * 0.2 + phase) + i as f64 * 0.05).collect();
        Sequence::from_scalars(&v).unwrap()
    }

    #[test]
    fn zero_model_gives_zero_rewards() {
        let x = wave(5, 0.0);
        let pairs = AlignedPairs::from_parallel(&x, &x).unwrap();
        let model = RatioModel::new(pairs, alloc::vec![0.0; 5], KernelParams::new(1.0, 1.0, 0.1).unwrap()).unwrap();
        let r = evaluate_reward_grid(&x, &x, &model).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_center_grid_is_rank_one() {
        let x = wave(4, 0.0);
        let y = wave(3, 1.0);
        let c = AlignedPairs::from_parallel(&Sequence::from_scalars(&[0.2]).unwrap(), &Sequence::from_scalars(&[0.5]).unwrap()).unwrap();
        let p = KernelParams::new(0.7, 1.3, 0.1).unwrap();
        let model = RatioModel::new(c, alloc::vec![1.0], p).unwrap();
        let r = evaluate_reward_grid(&x, &y, &model).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let kx = crate::lsmi::gaussian_kernel(x.row(i), &[0.2], 0.7).unwrap();
                let ly = crate::lsmi::gaussian_kernel(y.row(j), &[0.5], 1.3).unwrap();
                assert_abs_diff_eq!(r.get(i, j), kx * ly, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn reward_grid_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mk = |rng: &mut ChaCha8Rng, n: usize, d: usize| {
            Sequence::new((0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(), n, d).unwrap()
        };
        let x = mk(&mut rng, 5, 2);
        let y = mk(&mut rng, 5, 3);
        let centers = AlignedPairs::from_parallel(&mk(&mut rng, 4, 2), &mk(&mut rng, 4, 3)).unwrap();
        let alpha: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = RatioModel::new(centers, alpha, KernelParams::new(0.9, 1.1, 0.1).unwrap()).unwrap();
        let r = evaluate_reward_grid(&x, &y, &model).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let naive: f64 = (0..4)
                    .map(|c| {
                        model.alpha[c]
                            * crate::lsmi::gaussian_kernel(x.row(i), model.centers.x(c), 0.9).unwrap()
                            * crate::lsmi::gaussian_kernel(y.row(j), model.centers.y(c), 1.1).unwrap()
                    })
                    .sum();
                assert_abs_diff_eq!(r.get(i, j), naive, epsilon = 1e-12);
                assert_abs_diff_eq!(r.get(i, j), model.eval(x.row(i), y.row(j)), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn self_alignment_trace_is_increasing() {
        let x = wave(40, 0.0);
        let cfg = LsdtwConfig {
            init: InitStrategy::Uniform,
            ..LsdtwConfig::default()
        };
        let res = lsdtw_align(&x, &x, &cfg).unwrap();
        assert!(res.smi_trace.windows(2).all(|w| w[1] > w[0]));
        assert!(res.final_smi() >= res.smi_trace[0]);
        assert_eq!(validate_path(&res.path, 40, 40), Ok(()));
        assert!(res.iterations_run <= cfg.max_iterations);
    }

    #[test]
    fn identical_inputs_pick_uniform_on_tie() {
        let x = wave(30, 0.0);
        let init = choose_init(&x, &x, &LsdtwConfig::default()).unwrap();
        assert_eq!(init.label, InitLabel::Uniform);
        assert_eq!(init.path, AlignmentPath::diagonal(30));
    }

    #[test]
    fn singleton_sequences_take_the_forced_path() {
        let x = Sequence::from_scalars(&[0.5]).unwrap();
        let y = wave(6, 0.0);
        let res = lsdtw_align(&x, &y, &LsdtwConfig::default()).unwrap();
        assert_eq!(res.path, uniform_init(1, 6));
        assert_eq!(res.iterations_run, 0);
        assert!(res.converged);
        let res = lsdtw_align(&y, &x, &LsdtwConfig::default()).unwrap();
        assert_eq!(res.path, uniform_init(6, 1));
    }

    #[test]
    fn accepts_different_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let x: Vec<[f64; 2]> = t.iter().map(|&s| [s, libm::sin(6.0 * s)]).collect();
        let y: Vec<[f64; 3]> = t
            .iter()
            .map(|&s| [libm::cos(3.0 * s), s * s, rng.random_range(-0.05..0.05)])
            .collect();
        let x = Sequence::from_rows(&x).unwrap();
        let y = Sequence::from_rows(&y).unwrap();
        let res = lsdtw_align(&x, &y, &LsdtwConfig::default()).unwrap();
        assert_eq!(validate_path(&res.path, 50, 50), Ok(()));
        assert!(crate::warp::dtw_align(&x, &y).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let x = wave(35, 0.0);
        let y = wave(30, 0.4);
        let cfg = LsdtwConfig {
            seed: 17,
            ..LsdtwConfig::default()
        };
        assert_eq!(lsdtw_align(&x, &y, &cfg).unwrap(), lsdtw_align(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn refit_mode_keeps_trace_monotone() {
        let x = wave(35, 0.0);
        let y = wave(28, 0.7);
        let cfg = LsdtwConfig {
            refit_cv_each_iteration: true,
            ..LsdtwConfig::default()
        };
        let res = lsdtw_align(&x, &y, &cfg).unwrap();
        assert!(res.smi_trace.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_config() {
        let x = wave(10, 0.0);
        let bad = LsdtwConfig {
            cv_folds: 1,
            ..LsdtwConfig::default()
        };
        assert!(lsdtw_align(&x, &x, &bad).is_err());
        let bad = LsdtwConfig {
            max_iterations: 0,
            ..LsdtwConfig::default()
        };
        assert!(lsdtw_align(&x, &x, &bad).is_err());
    }
}
