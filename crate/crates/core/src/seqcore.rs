//! Sequences, alignment paths and the constraints every path must satisfy.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// A time-ordered `n × d` matrix of samples, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    data: Vec<f64>,
    n: usize,
    d: usize,
    id: Option<String>,
}

impl Sequence {
    /// Builds a sequence from row-major data. Rejects empty shapes, ragged
    /// lengths and non-finite entries.
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidSequence(alloc::format!(
                "shape {n}x{d} has no samples"
            )));
        }
        if data.len() != n * d {
            return Err(Error::InvalidSequence(alloc::format!(
                "expected {} values for shape {n}x{d}, got {}",
                n * d,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSequence(alloc::format!(
                "non-finite value at row {}, column {}",
                pos / d + 1,
                pos % d + 1
            )));
        }
        Ok(Self {
            data,
            n,
            d,
            id: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::InvalidSequence(alloc::format!(
                    "row {} has {} values, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), d)
    }

    /// A one-dimensional sequence.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Which alignment constraint a path breaks. Step numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathViolation {
    Empty,
    LengthMismatch { x: usize, y: usize },
    ZeroIndex { step: usize },
    OutOfRange { step: usize },
    Boundary,
    Monotonicity { step: usize },
    Continuity { step: usize },
    Stationary { step: usize },
}

impl PathViolation {
    /// Short constraint name.
    pub fn name(&self) -> &'static str {
        match self {
            PathViolation::Empty => "empty",
            PathViolation::LengthMismatch { .. } => "length",
            PathViolation::ZeroIndex { .. } | PathViolation::OutOfRange { .. } => "range",
            PathViolation::Boundary => "boundary",
            PathViolation::Monotonicity { .. } => "monotonicity",
            PathViolation::Continuity { .. } => "continuity",
            PathViolation::Stationary { .. } => "stationary",
        }
    }
}

impl fmt::Display for PathViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathViolation::Empty => write!(f, "path has no steps"),
            PathViolation::LengthMismatch { x, y } => {
                write!(f, "pi_x has {x} entries but pi_y has {y}")
            }
            PathViolation::ZeroIndex { step } => {
                write!(f, "index 0 at step {step} (indices are 1-based)")
            }
            PathViolation::OutOfRange { step } => write!(f, "index out of range at step {step}"),
            PathViolation::Boundary => {
                write!(f, "boundary condition violated (must start at (1,1) and end at (n_x,n_y))")
            }
            PathViolation::Monotonicity { step } => {
                write!(f, "monotonicity condition violated at step {step}")
            }
            PathViolation::Continuity { step } => {
                write!(f, "continuity condition violated at step {step}")
            }
            PathViolation::Stationary { step } => write!(f, "stationary step at step {step}"),
        }
    }
}

/// Paired time indices `(i, j)` into `x` and `y`, 0-based.
///
/// Construction does not check the alignment constraints; use
/// [`validate_path`] against the sequence lengths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlignmentPath {
    steps: Vec<(usize, usize)>,
}

impl AlignmentPath {
    pub fn from_steps(steps: Vec<(usize, usize)>) -> Self {
        Self { steps }
    }

    /// Builds a path from 1-based index lists.
    pub fn from_one_based(pi_x: &[usize], pi_y: &[usize]) -> Result<Self, PathViolation> {
        if pi_x.len() != pi_y.len() {
            return Err(PathViolation::LengthMismatch {
                x: pi_x.len(),
                y: pi_y.len(),
            });
        }
        let mut steps = Vec::with_capacity(pi_x.len());
        for (t, (&i, &j)) in pi_x.iter().zip(pi_y).enumerate() {
            if i == 0 || j == 0 {
                return Err(PathViolation::ZeroIndex { step: t + 1 });
            }
            steps.push((i - 1, j - 1));
        }
        Ok(Self { steps })
    }

    /// The path as 1-based `(pi_x, pi_y)` lists.
    pub fn to_one_based(&self) -> (Vec<usize>, Vec<usize>) {
        self.steps.iter().map(|&(i, j)| (i + 1, j + 1)).unzip()
    }

    /// The diagonal path of a square `n × n` grid.
    pub fn diagonal(n: usize) -> Self {
        Self {
            steps: (0..n).map(|i| (i, i)).collect(),
        }
    }

    #[inline]
    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Grid size `(n_x, n_y)` implied by the last step.
    pub fn grid(&self) -> Option<(usize, usize)> {
        self.steps.last().map(|&(i, j)| (i + 1, j + 1))
    }
}

/// Checks boundary, continuity, monotonicity and the no-stationary-step rule
/// against lengths `n_x`, `n_y`, reporting the first violation.
pub fn validate_path(
    path: &AlignmentPath,
    n_x: usize,
    n_y: usize,
) -> core::result::Result<(), PathViolation> {
    let steps = path.steps();
    let (Some(&first), Some(&last)) = (steps.first(), steps.last()) else {
        return Err(PathViolation::Empty);
    };
    if let Some(t) = steps.iter().position(|&(i, j)| i >= n_x || j >= n_y) {
        return Err(PathViolation::OutOfRange { step: t + 1 });
    }
    if first != (0, 0) || last != (n_x - 1, n_y - 1) {
        return Err(PathViolation::Boundary);
    }
    for (t, w) in steps.windows(2).enumerate() {
        let (pi, pj) = w[0];
        let (ci, cj) = w[1];
        let step = t + 2;
        if ci < pi || cj < pj {
            return Err(PathViolation::Monotonicity { step });
        }
        if ci - pi > 1 || cj - pj > 1 {
            return Err(PathViolation::Continuity { step });
        }
        if ci == pi && cj == pj {
            return Err(PathViolation::Stationary { step });
        }
    }
    Ok(())
}

/// Samples paired by a path: pair `t` is `(x[i_t], y[j_t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPairs {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dx: usize,
    dy: usize,
    len: usize,
}

impl AlignedPairs {
    /// Pairs rows `x[k]` with `y[k]` directly (equal-length inputs).
    pub fn from_parallel(x: &Sequence, y: &Sequence) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(alloc::format!(
                "parallel pairing needs equal lengths, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(Self {
            xs: x.as_slice().to_vec(),
            ys: y.as_slice().to_vec(),
            dx: x.dim(),
            dy: y.dim(),
            len: x.len(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dx, self.dy)
    }

    #[inline]
    pub fn x(&self, t: usize) -> &[f64] {
        &self.xs[t * self.dx..(t + 1) * self.dx]
    }

    #[inline]
    pub fn y(&self, t: usize) -> &[f64] {
        &self.ys[t * self.dy..(t + 1) * self.dy]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], &[f64])> + '_ {
        self.xs.chunks_exact(self.dx).zip(self.ys.chunks_exact(self.dy))
    }

    /// The pairs at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut xs = Vec::with_capacity(indices.len() * self.dx);
        let mut ys = Vec::with_capacity(indices.len() * self.dy);
        for &t in indices {
            xs.extend_from_slice(self.x(t));
            ys.extend_from_slice(self.y(t));
        }
        Self {
            xs,
            ys,
            dx: self.dx,
            dy: self.dy,
            len: indices.len(),
        }
    }
}

/// Gathers the sample pairs named by a valid path.
pub fn gather_pairs(x: &Sequence, y: &Sequence, path: &AlignmentPath) -> Result<AlignedPairs> {
    validate_path(path, x.len(), y.len())?;
    let mut xs = Vec::with_capacity(path.len() * x.dim());
    let mut ys = Vec::with_capacity(path.len() * y.dim());
    for &(i, j) in path.steps() {
        xs.extend_from_slice(x.row(i));
        ys.extend_from_slice(y.row(j));
    }
    Ok(AlignedPairs {
        xs,
        ys,
        dx: x.dim(),
        dy: y.dim(),
        len: path.len(),
    })
}

/// Anchor indices of the uniform initialization, 0-based:
/// `floor(1 + t·n/m)` (1-based) for `t = 0..m`, with the last entry forced
/// to `n`, where `m = min(n_x, n_y)`.
///
/// The anchors may jump by more than one index; [`uniform_init`] repairs them.
pub fn uniform_anchors(n_x: usize, n_y: usize) -> Vec<(usize, usize)> {
    let m = n_x.min(n_y);
    let mut anchors: Vec<(usize, usize)> = (0..m).map(|t| (t * n_x / m, t * n_y / m)).collect();
    if let Some(last) = anchors.last_mut() {
        *last = (n_x - 1, n_y - 1);
    }
    anchors
}

/// Uniform initial alignment, expanded into a valid path.
pub fn uniform_init(n_x: usize, n_y: usize) -> AlignmentPath {
    assert!(n_x >= 1 && n_y >= 1, "uniform_init needs non-empty sequences");
    connect_anchors(&uniform_anchors(n_x, n_y))
}

/// Joins monotone anchor points into a valid path.
///
/// A jump of `(dx, dy)` becomes `max(dx, dy)` unit steps: the index with the
/// larger jump advances every step, the other advances only during the final
/// `min(dx, dy)` steps. Repeated anchors are dropped and the path is started
/// at `(0, 0)` if the first anchor is elsewhere.
///
/// # Panics
///
/// If the anchors are not non-decreasing in both coordinates.
pub fn connect_anchors(anchors: &[(usize, usize)]) -> AlignmentPath {
    let mut steps: Vec<(usize, usize)> = Vec::with_capacity(anchors.len());
    steps.push((0, 0));
    for &(ti, tj) in anchors {
        let (ci, cj) = *steps.last().unwrap();
        assert!(ti >= ci && tj >= cj, "anchors must be monotone");
        let (dx, dy) = (ti - ci, tj - cj);
        let span = dx.max(dy);
        for k in 1..=span {
            let i = ci + k.saturating_sub(span - dx);
            let j = cj + k.saturating_sub(span - dy);
            steps.push((i, j));
        }
    }
    AlignmentPath { steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn one_based(px: &[usize], py: &[usize]) -> AlignmentPath {
        AlignmentPath::from_one_based(px, py).unwrap()
    }

    #[test]
    fn validate_identity_diagonal() {
        assert_eq!(validate_path(&one_based(&[1, 2, 3], &[1, 2, 3]), 3, 3), Ok(()));
    }

    #[test]
    fn validate_reports_boundary() {
        let v = validate_path(&one_based(&[1, 2], &[1, 1]), 2, 2).unwrap_err();
        assert_eq!(v, PathViolation::Boundary);
        assert_eq!(v.name(), "boundary");
    }

    #[test]
    fn validate_reports_continuity() {
        let v = validate_path(&one_based(&[1, 3], &[1, 2]), 3, 2).unwrap_err();
        assert_eq!(v, PathViolation::Continuity { step: 2 });
    }

    #[test]
    fn validate_reports_stationary_and_monotonicity() {
        let p = one_based(&[1, 1, 2], &[1, 1, 2]);
        assert_eq!(validate_path(&p, 2, 2), Err(PathViolation::Stationary { step: 2 }));
        let p = one_based(&[1, 2, 1, 2], &[1, 1, 2, 2]);
        assert_eq!(validate_path(&p, 2, 2), Err(PathViolation::Monotonicity { step: 3 }));
        let p = one_based(&[1, 2, 3], &[1, 2, 3]);
        assert_eq!(validate_path(&p, 2, 3), Err(PathViolation::OutOfRange { step: 3 }));
        assert_eq!(
            validate_path(&AlignmentPath::from_steps(vec![]), 1, 1),
            Err(PathViolation::Empty)
        );
    }

    #[test]
    fn from_one_based_rejects_bad_lists() {
        assert_eq!(
            AlignmentPath::from_one_based(&[1, 2], &[1]),
            Err(PathViolation::LengthMismatch { x: 2, y: 1 })
        );
        assert_eq!(
            AlignmentPath::from_one_based(&[0], &[1]),
            Err(PathViolation::ZeroIndex { step: 1 })
        );
    }

    #[test]
    fn gather_examples() {
        let x = Sequence::from_scalars(&[1.0, 2.0]).unwrap();
        let y = Sequence::from_scalars(&[9.0, 8.0]).unwrap();
        let pairs = gather_pairs(&x, &y, &AlignmentPath::diagonal(2)).unwrap();
        let got: Vec<_> = pairs.iter().map(|(a, b)| (a[0], b[0])).collect();
        assert_eq!(got, vec![(1.0, 9.0), (2.0, 8.0)]);

        let x = Sequence::from_scalars(&[5.0]).unwrap();
        let y = Sequence::from_scalars(&[7.0]).unwrap();
        let pairs = gather_pairs(&x, &y, &one_based(&[1], &[1])).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs.x(0)[0], pairs.y(0)[0]), (5.0, 7.0));

        let x = Sequence::from_scalars(&[1.0, 2.0]).unwrap();
        let y = Sequence::from_scalars(&[3.0]).unwrap();
        let pairs = gather_pairs(&x, &y, &one_based(&[1, 2], &[1, 1])).unwrap();
        let got: Vec<_> = pairs.iter().map(|(a, b)| (a[0], b[0])).collect();
        assert_eq!(got, vec![(1.0, 3.0), (2.0, 3.0)]);
    }

    #[test]
    fn gather_rejects_invalid_path() {
        let x = Sequence::from_scalars(&[1.0, 2.0]).unwrap();
        let y = Sequence::from_scalars(&[1.0, 2.0]).unwrap();
        let err = gather_pairs(&x, &y, &one_based(&[1, 2], &[1, 1])).unwrap_err();
        assert_eq!(err, Error::InvalidPath(PathViolation::Boundary));
    }

    #[test]
    fn sequence_rejects_bad_input() {
        assert!(Sequence::new(vec![], 0, 1).is_err());
        assert!(Sequence::new(vec![1.0, f64::NAN], 2, 1).is_err());
        assert!(Sequence::new(vec![1.0, 2.0, 3.0], 2, 2).is_err());
        assert!(Sequence::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn uniform_square_is_identity() {
        assert_eq!(uniform_init(4, 4), AlignmentPath::diagonal(4));
    }

    #[test]
    fn uniform_anchor_formula() {
        let anchors = uniform_anchors(6, 3);
        let (px, py): (Vec<_>, Vec<_>) = anchors.iter().map(|&(i, j)| (i + 1, j + 1)).unzip();
        assert_eq!(px, vec![1, 3, 6]);
        assert_eq!(py, vec![1, 2, 3]);
        let path = uniform_init(6, 3);
        assert_eq!(path, one_based(&[1, 2, 3, 4, 5, 6], &[1, 1, 2, 2, 2, 3]));
        assert_eq!(validate_path(&path, 6, 3), Ok(()));
    }

    #[test]
    fn uniform_repair_expands_jumps() {
        let anchors = uniform_anchors(5, 2);
        assert_eq!(anchors, vec![(0, 0), (4, 1)]);
        let path = uniform_init(5, 2);
        assert_eq!(path, one_based(&[1, 2, 3, 4, 5], &[1, 1, 1, 1, 2]));
        assert_eq!(validate_path(&path, 5, 2), Ok(()));
    }

    #[test]
    fn degenerate_singleton_pairs_everything() {
        let path = uniform_init(1, 4);
        assert_eq!(path, one_based(&[1, 1, 1, 1], &[1, 2, 3, 4]));
        assert_eq!(uniform_init(3, 1), one_based(&[1, 2, 3], &[1, 1, 1]));
    }

    /// Every valid path on an `n_x × n_y` grid.
    fn all_paths(n_x: usize, n_y: usize) -> Vec<Vec<(usize, usize)>> {
        fn rec(cur: &mut Vec<(usize, usize)>, n_x: usize, n_y: usize, out: &mut Vec<Vec<(usize, usize)>>) {
            let (i, j) = *cur.last().unwrap();
            if (i, j) == (n_x - 1, n_y - 1) {
                out.push(cur.clone());
                return;
            }
            for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
                if i + di < n_x && j + dj < n_y {
                    cur.push((i + di, j + dj));
                    rec(cur, n_x, n_y, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut vec![(0, 0)], n_x, n_y, &mut out);
        out
    }

    #[test]
    fn path_length_bounds_hold_for_all_small_grids() {
        for n_x in 1..=5 {
            for n_y in 1..=5 {
                for steps in all_paths(n_x, n_y) {
                    let p = AlignmentPath::from_steps(steps);
                    assert_eq!(validate_path(&p, n_x, n_y), Ok(()));
                    assert!(p.len() >= n_x.max(n_y) && p.len() <= n_x + n_y - 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn uniform_init_is_always_valid(n_x in 1usize..60, n_y in 1usize..60) {
            let p = uniform_init(n_x, n_y);
            prop_assert_eq!(validate_path(&p, n_x, n_y), Ok(()));
        }

        #[test]
        fn gather_reproduces_path_rows(n_x in 1usize..12, n_y in 1usize..12) {
            let x = Sequence::from_scalars(&(0..n_x).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
            let y = Sequence::from_scalars(&(0..n_y).map(|j| 100.0 + j as f64).collect::<Vec<_>>()).unwrap();
            let path = uniform_init(n_x, n_y);
            let pairs = gather_pairs(&x, &y, &path).unwrap();
            let back: Vec<(usize, usize)> = pairs
                .iter()
                .map(|(a, b)| (a[0] as usize, (b[0] - 100.0) as usize))
                .collect();
            prop_assert_eq!(back.as_slice(), path.steps());
        }

        #[test]
        fn one_based_round_trip(n_x in 1usize..30, n_y in 1usize..30) {
            let path = uniform_init(n_x, n_y);
            let (px, py) = path.to_one_based();
            prop_assert_eq!(AlignmentPath::from_one_based(&px, &py).unwrap(), path);
        }
    }
}
