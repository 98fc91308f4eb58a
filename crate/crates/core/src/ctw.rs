//! Canonical time warping: alternate regularized CCA on the aligned pairs with
//! DTW between the projected sequences.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::math::sqrt;
use crate::seqcore::{gather_pairs, uniform_init, AlignedPairs, AlignmentPath, Sequence};
use crate::warp::dtw_align;
use crate::{Error, Result};

/// Dense projection matrix.
pub type Matrix = DMatrix<f64>;

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
/// Fraction of the summed canonical correlations kept by the latent space.
pub const CORRELATION_KEPT: f64 = 0.9;

/// Canonical directions of both sides, one column per direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Cca {
    pub vx: Matrix,
    pub vy: Matrix,
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    /// Canonical correlations, descending.
    pub correlations: Vec<f64>,
}

fn side_matrix(pairs: &AlignedPairs, x_side: bool) -> DMatrix<f64> {
    let (dx, dy) = pairs.dims();
    let d = if x_side { dx } else { dy };
    DMatrix::from_fn(pairs.len(), d, |t, c| if x_side { pairs.x(t)[c] } else { pairs.y(t)[c] })
}

/// `(C + εI)^{-1/2}` by symmetric eigen decomposition.
fn inverse_sqrt(c: DMatrix<f64>, side: &'static str) -> Result<DMatrix<f64>> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure);
    }
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let floor = top * 1e-12;
    if !(top > 0.0) || eig.eigenvalues.iter().any(|&v| v <= floor) {
        return Err(Error::RankDeficient { side });
    }
    let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / sqrt(v)));
    Ok(&eig.eigenvectors * scale * eig.eigenvectors.transpose())
}

/// Regularized CCA between the two sides of `pairs`.
///
/// Both sides are centered, covariances get `εI` added, and the whitened
/// cross-covariance is decomposed by SVD. Directions are scaled to unit
/// variance under the regularized covariance and sign-fixed so that the
/// largest-magnitude `x` loading of each direction is positive.
pub fn regularized_cca(pairs: &AlignedPairs, epsilon: f64) -> Result<Cca> {
    let m = pairs.len();
    if m < 2 {
        return Err(Error::invalid("CCA needs at least two pairs"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("CCA regularization must be non-negative"));
    }
    let (dx, dy) = pairs.dims();
    let mut xs = side_matrix(pairs, true);
    let mut ys = side_matrix(pairs, false);
    let mean_x = DVector::from_fn(dx, |c, _| xs.column(c).mean());
    let mean_y = DVector::from_fn(dy, |c, _| ys.column(c).mean());
    for mut row in xs.row_iter_mut() {
        row -= mean_x.transpose();
    }
    for mut row in ys.row_iter_mut() {
        row -= mean_y.transpose();
    }
    let inv_m = 1.0 / m as f64;
    let cxx = xs.transpose() * &xs * inv_m + DMatrix::identity(dx, dx) * epsilon;
    let cyy = ys.transpose() * &ys * inv_m + DMatrix::identity(dy, dy) * epsilon;
    let cxy = xs.transpose() * &ys * inv_m;

    let wx = inverse_sqrt(cxx, "x")?;
    let wy = inverse_sqrt(cyy, "y")?;
    let t = &wx * cxy * &wy;
    let svd = t.try_svd(true, true, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let u = svd.u.ok_or(Error::EigenFailure)?;
    let v_t = svd.v_t.ok_or(Error::EigenFailure)?;

    let k = dx.min(dy);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(k);

    let mut vx = DMatrix::zeros(dx, k);
    let mut vy = DMatrix::zeros(dy, k);
    let mut correlations = Vec::with_capacity(k);
    for (col, &src) in order.iter().enumerate() {
        let mut a = &wx * u.column(src);
        let mut b = &wy * v_t.row(src).transpose();
        let pivot = a.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            a.neg_mut();
            b.neg_mut();
        }
        vx.set_column(col, &a);
        vy.set_column(col, &b);
        correlations.push(svd.singular_values[src]);
    }
    Ok(Cca {
        vx,
        vy,
        mean_x,
        mean_y,
        correlations,
    })
}

/// Smallest `b ≥ 1` whose top-`b` correlations reach 90% of their sum.
pub fn latent_dimension(correlations: &[f64]) -> usize {
    let total: f64 = correlations.iter().sum();
    if !(total > 0.0) {
        return 1;
    }
    let mut acc = 0.0;
    for (b, c) in correlations.iter().enumerate() {
        acc += c;
        if acc >= CORRELATION_KEPT * total {
            return b + 1;
        }
    }
    correlations.len().max(1)
}

fn project(seq: &Sequence, mean: &DVector<f64>, v: &DMatrix<f64>, b: usize) -> Result<Sequence> {
    let mut out = Vec::with_capacity(seq.len() * b);
    for row in seq.rows() {
        for c in 0..b {
            let col = v.column(c);
            out.push(row.iter().zip(mean.iter()).zip(col.iter()).map(|((r, mu), w)| (r - mu) * w).sum());
        }
    }
    Sequence::new(out, seq.len(), b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtwModel {
    /// `d_x × b`.
    pub vx: Matrix,
    /// `d_y × b`.
    pub vy: Matrix,
    pub b: usize,
    pub epsilon: f64,
    pub path: AlignmentPath,
    pub correlations: Vec<f64>,
    /// Projected DTW cost of every accepted iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Aligns `x` and `y` by alternating CCA and DTW in the latent space.
///
/// Starts from DTW when the dimensions agree and from the uniform path
/// otherwise. Stops when the path repeats, when the projected cost fails to
/// decrease (keeping the previous state), or after `max_iterations`.
pub fn ctw_align(x: &Sequence, y: &Sequence, epsilon: f64, max_iterations: usize) -> Result<CtwModel> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid("CTW needs at least two samples per sequence"));
    }
    if max_iterations == 0 {
        return Err(Error::invalid("CTW needs at least one iteration"));
    }
    let mut path = if x.dim() == y.dim() {
        dtw_align(x, y)?.0
    } else {
        uniform_init(x.len(), y.len())
    };

    let mut model: Option<CtwModel> = None;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;
    for it in 1..=max_iterations {
        iterations_run = it;
        let pairs = gather_pairs(x, y, &path)?;
        let cca = regularized_cca(&pairs, epsilon).map_err(|e| e.at_iteration(it))?;
        let b = latent_dimension(&cca.correlations);
        let px = project(x, &cca.mean_x, &cca.vx, b)?;
        let py = project(y, &cca.mean_y, &cca.vy, b)?;
        let (next, cost) = dtw_align(&px, &py)?;
        if trace.last().is_some_and(|&prev| cost >= prev) {
            converged = true;
            break;
        }
        trace.push(cost);
        let unchanged = next == path;
        model = Some(CtwModel {
            vx: cca.vx.columns(0, b).into_owned(),
            vy: cca.vy.columns(0, b).into_owned(),
            b,
            epsilon,
            path: next.clone(),
            correlations: cca.correlations,
            objective_trace: Vec::new(),
            iterations_run: 0,
            converged: false,
        });
        if unchanged {
            converged = true;
            break;
        }
        path = next;
    }
    let mut model = model.expect("first iteration is always accepted");
    model.objective_trace = trace;
    model.iterations_run = iterations_run;
    model.converged = converged;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::validate_path;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn curve(n: usize) -> Sequence {
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * 5.0;
                [libm::cos(t) * (1.0 + t), libm::sin(t) * (1.0 + t)]
            })
            .collect();
        Sequence::from_rows(&rows).unwrap()
    }

    #[test]
    fn self_correlations_are_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
        let s = Sequence::new(data, 100, 3).unwrap();
        let pairs = AlignedPairs::from_parallel(&s, &s).unwrap();
        let cca = regularized_cca(&pairs, 0.0).unwrap();
        assert_eq!(cca.correlations.len(), 3);
        assert!(cca.correlations.iter().all(|c| (c - 1.0).abs() < 1e-6));
    }

    #[test]
    fn negated_side_is_fully_correlated() {
        let x: Vec<f64> = (0..50).map(|i| libm::sin(i as f64 * 0.3) + i as f64 * 0.01).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let pairs = AlignedPairs::from_parallel(
            &Sequence::from_scalars(&x).unwrap(),
            &Sequence::from_scalars(&y).unwrap(),
        )
        .unwrap();
        let cca = regularized_cca(&pairs, 0.0).unwrap();
        assert!((cca.correlations[0] - 1.0).abs() < 1e-9);
        // sign convention: x loading positive, so the y loading is negative
        assert!(cca.vx[(0, 0)] > 0.0 && cca.vy[(0, 0)] < 0.0);
    }

    #[test]
    fn constant_side_is_rank_deficient() {
        let x = Sequence::from_scalars(&[1.0, 1.0, 1.0]).unwrap();
        let y = Sequence::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let pairs = AlignedPairs::from_parallel(&x, &y).unwrap();
        assert_eq!(
            regularized_cca(&pairs, 0.0),
            Err(Error::RankDeficient { side: "x" })
        );
        // regularization rescues it
        assert!(regularized_cca(&pairs, 0.01).is_ok());
    }

    #[test]
    fn latent_dimension_rule() {
        assert_eq!(latent_dimension(&[0.8, 0.15, 0.05]), 2);
        assert_eq!(latent_dimension(&[0.95, 0.05]), 1);
        assert_eq!(latent_dimension(&[1.0, 0.0]), 1);
        assert_eq!(latent_dimension(&[0.5, 0.5]), 2);
        assert_eq!(latent_dimension(&[0.0, 0.0]), 1);
    }

    #[test]
    fn identical_inputs_align_on_the_diagonal() {
        let x = curve(40);
        let model = ctw_align(&x, &x, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_eq!(model.path, AlignmentPath::diagonal(40));
        assert!(model.objective_trace.last().unwrap().abs() < 1e-18);
        assert!((&model.vx - &model.vy).norm() < 1e-9);
    }

    #[test]
    fn different_dimensions_start_uniform() {
        let x = curve(30);
        let rows: Vec<[f64; 3]> = (0..25)
            .map(|i| {
                let t = i as f64 / 25.0 * 5.0;
                [libm::cos(t), libm::sin(t), t]
            })
            .collect();
        let y = Sequence::from_rows(&rows).unwrap();
        let model = ctw_align(&x, &y, DEFAULT_EPSILON, 10).unwrap();
        assert!(model.b >= 1 && model.b <= 2);
        assert_eq!(model.vx.shape(), (2, model.b));
        assert_eq!(model.vy.shape(), (3, model.b));
        assert_eq!(validate_path(&model.path, 30, 25), Ok(()));
        assert!(model.objective_trace.windows(2).all(|w| w[1] < w[0]));
    }
}
