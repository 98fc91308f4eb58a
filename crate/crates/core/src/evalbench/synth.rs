//! Synthetic sequence pairs with known ground-truth alignments.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::math::sin;
use crate::seqcore::{connect_anchors, AlignmentPath, Sequence};
use crate::{Error, Result};

/// Standard deviation of the latent random-walk increments.
pub const LATENT_STEP_STD: f64 = 2.0;
/// Width of the moving average applied to the latent walk.
pub const LATENT_SMOOTHING: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Multimodal,
    NonGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n_x: usize,
    pub n_y: usize,
    /// Noise level, non-Gaussian only.
    pub eta: f64,
    /// Latent trajectory length, non-Gaussian only.
    pub latent_len: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Desk-scale multimodal pair (200 / 100 samples).
    pub fn multimodal(n_y: usize, seed: u64) -> Self {
        Self {
            kind: SynthKind::Multimodal,
            n_x: 2 * n_y,
            n_y,
            eta: 0.0,
            latent_len: 0,
            seed,
        }
    }

    pub fn nongaussian(n_x: usize, n_y: usize, eta: f64, seed: u64) -> Self {
        Self {
            kind: SynthKind::NonGaussian,
            n_x,
            n_y,
            eta,
            latent_len: n_x.max(n_y),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::invalid("synthetic sequences need at least 2 samples"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(alloc::format!("noise level must be >= 0, got {}", self.eta)));
        }
        match self.kind {
            SynthKind::Multimodal if self.n_x != 2 * self.n_y => Err(Error::invalid(alloc::format!(
                "multimodal data needs n_x = 2 n_y, got {} and {}",
                self.n_x,
                self.n_y
            ))),
            SynthKind::NonGaussian if self.latent_len < 2 => {
                Err(Error::invalid("latent trajectory needs at least 2 points"))
            }
            _ => Ok(()),
        }
    }
}

/// A generated pair with its ground-truth path.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub x: Sequence,
    pub y: Sequence,
    pub truth: AlignmentPath,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    match spec.kind {
        SynthKind::Multimodal => gen_multimodal(spec),
        SynthKind::NonGaussian => gen_nongaussian(spec),
    }
}

/// `x_i = z_i + 0.4 sin(2π z_i)`, `y_j = z_{2j−1}` (1-based), `z_i = i / n_x`.
///
/// The truth pairs `y_j` with `x_{2j−1}`, joined into a valid path.
pub fn gen_multimodal(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    if spec.kind != SynthKind::Multimodal {
        return Err(Error::invalid("spec is not multimodal"));
    }
    let n_x = spec.n_x;
    let z = |i: usize| i as f64 / n_x as f64;
    let xs: Vec<f64> = (1..=n_x).map(|i| z(i) + 0.4 * sin(2.0 * PI * z(i))).collect();
    let ys: Vec<f64> = (1..=spec.n_y).map(|j| z((j - 1) * 2 + 1)).collect();
    let mut anchors: Vec<(usize, usize)> = (0..spec.n_y).map(|j| (2 * j, j)).collect();
    anchors.push((n_x - 1, spec.n_y - 1));
    Ok(SynthData {
        x: Sequence::from_scalars(&xs)?,
        y: Sequence::from_scalars(&ys)?,
        truth: connect_anchors(&anchors),
    })
}

/// Uniformly random step choices (advance first, second, or both) from
/// `(0, 0)` to `(n − 1, m − 1)`.
pub fn random_path<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> AlignmentPath {
    let (mut i, mut k) = (0, 0);
    let mut steps = alloc::vec![(0, 0)];
    while (i, k) != (n - 1, m - 1) {
        let can_i = i + 1 < n;
        let can_k = k + 1 < m;
        let mut moves: [(usize, usize); 3] = [(0, 0); 3];
        let mut count = 0;
        if can_i && can_k {
            moves[count] = (1, 1);
            count += 1;
        }
        if can_i {
            moves[count] = (1, 0);
            count += 1;
        }
        if can_k {
            moves[count] = (0, 1);
            count += 1;
        }
        let (di, dk) = moves[rng.random_range(0..count)];
        i += di;
        k += dk;
        steps.push((i, k));
    }
    AlignmentPath::from_steps(steps)
}

/// Cumulative sum of Gaussian increments smoothed by a centered moving
/// average (window truncated at the ends).
pub fn latent_trajectory<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let mut walk = Vec::with_capacity(len);
    let mut cur = [0.0; 2];
    for _ in 0..len {
        for c in cur.iter_mut() {
            let step: f64 = rng.sample(StandardNormal);
            *c += LATENT_STEP_STD * step;
        }
        walk.push(cur);
    }
    let half = LATENT_SMOOTHING / 2;
    (0..len)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(len);
            let mut acc = [0.0; 2];
            for p in &walk[lo..hi] {
                acc[0] += p[0];
                acc[1] += p[1];
            }
            let w = (hi - lo) as f64;
            [acc[0] / w, acc[1] / w]
        })
        .collect()
}

/// Exponential(1) noise shifted to zero mean.
pub fn centered_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e - 1.0
}

/// Per-index ranges of the latent points each sequence index is paired with,
/// and the reverse.
fn latent_ranges(warp: &AlignmentPath, n: usize, m: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let mut by_index = alloc::vec![(usize::MAX, 0); n];
    let mut by_latent = alloc::vec![(usize::MAX, 0); m];
    for &(i, k) in warp.steps() {
        by_index[i].0 = by_index[i].0.min(k);
        by_index[i].1 = by_index[i].1.max(k);
        by_latent[k].0 = by_latent[k].0.min(i);
        by_latent[k].1 = by_latent[k].1.max(i);
    }
    (by_index, by_latent)
}

/// Ground truth implied by two warps onto a shared latent index: for each
/// latent point, the spans of `x` and `y` indices attached to it, joined in
/// latent order.
pub fn compose_warps(warp_x: &AlignmentPath, warp_y: &AlignmentPath) -> Result<AlignmentPath> {
    let (Some((n_x, m)), Some((n_y, m2))) = (warp_x.grid(), warp_y.grid()) else {
        return Err(Error::invalid("empty warp"));
    };
    if m != m2 {
        return Err(Error::invalid("warps refer to different latent lengths"));
    }
    let (_, lx) = latent_ranges(warp_x, n_x, m);
    let (_, ly) = latent_ranges(warp_y, n_y, m);
    let mut anchors = Vec::with_capacity(2 * m);
    for k in 0..m {
        anchors.push((lx[k].0, ly[k].0));
        anchors.push((lx[k].1, ly[k].1));
    }
    Ok(connect_anchors(&anchors))
}

/// `Uᵀ z̄_i + η e_i` where `z̄_i` averages the latent points warped onto `i`.
pub fn render_warped(
    latent: &[[f64; 2]],
    transform: &[[f64; 2]; 2],
    warp: &AlignmentPath,
    eta: f64,
    noise: &[f64],
) -> Result<Sequence> {
    let Some((n, m)) = warp.grid() else {
        return Err(Error::invalid("empty warp"));
    };
    if m != latent.len() || noise.len() != 2 * n {
        return Err(Error::invalid("warp, latent trajectory and noise disagree in size"));
    }
    let (by_index, _) = latent_ranges(warp, n, m);
    let mut data = Vec::with_capacity(2 * n);
    for (i, &(lo, hi)) in by_index.iter().enumerate() {
        let mut z = [0.0; 2];
        for p in &latent[lo..=hi] {
            z[0] += p[0];
            z[1] += p[1];
        }
        let w = (hi - lo + 1) as f64;
        let z = [z[0] / w, z[1] / w];
        for c in 0..2 {
            // (Uᵀ z)_c = Σ_r U[r][c] z_r
            let v = transform[0][c] * z[0] + transform[1][c] * z[1];
            data.push(v + eta * noise[2 * i + c]);
        }
    }
    Sequence::new(data, n, 2)
}

/// Affine-transformed, randomly warped 2-D trajectories with additive
/// zero-mean exponential noise scaled by `eta`.
pub fn gen_nongaussian(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    if spec.kind != SynthKind::NonGaussian {
        return Err(Error::invalid("spec is not non-Gaussian"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut transform = || -> [[f64; 2]; 2] {
        core::array::from_fn(|_| core::array::from_fn(|_| rng.sample(StandardNormal)))
    };
    let ux = transform();
    let uy = transform();
    let latent = latent_trajectory(spec.latent_len, &mut rng);
    let warp_x = random_path(spec.n_x, spec.latent_len, &mut rng);
    let warp_y = random_path(spec.n_y, spec.latent_len, &mut rng);
    let noise_x: Vec<f64> = (0..2 * spec.n_x).map(|_| centered_exponential(&mut rng)).collect();
    let noise_y: Vec<f64> = (0..2 * spec.n_y).map(|_| centered_exponential(&mut rng)).collect();
    Ok(SynthData {
        x: render_warped(&latent, &ux, &warp_x, spec.eta, &noise_x)?,
        y: render_warped(&latent, &uy, &warp_y, spec.eta, &noise_y)?,
        truth: compose_warps(&warp_x, &warp_y)?,
    })
}

/// `start, start + step, …` up to and including `stop` (within 1e-9).
pub fn eta_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start >= 0.0) || stop < start {
        return Err(Error::invalid("eta grid needs 0 <= start <= stop and step > 0"));
    }
    let count = ((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

/// A sequence with a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub label: String,
    pub sequence: Sequence,
}

/// Query and database sets for the retrieval protocol: `classes` distinct
/// latent trajectories, each instance a random warp of its class trajectory
/// onto a length in `[0.8·len, 1.2·len]` plus exponential noise. Class
/// trajectories are centered at the origin.
pub fn gen_retrieval_split(
    classes: usize,
    queries_per_class: usize,
    database_per_class: usize,
    len: usize,
    eta: f64,
    seed: u64,
) -> Result<(Vec<LabeledSequence>, Vec<LabeledSequence>)> {
    if classes == 0 || len < 5 {
        return Err(Error::invalid("retrieval split needs at least one class and length 5"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latents: Vec<Vec<[f64; 2]>> = (0..classes)
        .map(|_| {
            let mut z = latent_trajectory(len, &mut rng);
            // classes share a common center so only their shapes differ
            let mean = z.iter().fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
            let mean = [mean[0] / len as f64, mean[1] / len as f64];
            for p in &mut z {
                p[0] -= mean[0];
                p[1] -= mean[1];
            }
            z
        })
        .collect();
    let identity = [[1.0, 0.0], [0.0, 1.0]];
    let instance = |class: usize, rng: &mut ChaCha8Rng| -> Result<LabeledSequence> {
        let n = rng.random_range(len * 4 / 5..=len * 6 / 5);
        let warp = random_path(n, len, rng);
        let noise: Vec<f64> = (0..2 * n).map(|_| centered_exponential(rng)).collect();
        Ok(LabeledSequence {
            label: alloc::format!("class{class}"),
            sequence: render_warped(&latents[class], &identity, &warp, eta, &noise)?,
        })
    };
    let mut queries = Vec::with_capacity(classes * queries_per_class);
    let mut database = Vec::with_capacity(classes * database_per_class);
    for c in 0..classes {
        for _ in 0..queries_per_class {
            queries.push(instance(c, &mut rng)?);
        }
        for _ in 0..database_per_class {
            database.push(instance(c, &mut rng)?);
        }
    }
    Ok((queries, database))
}
