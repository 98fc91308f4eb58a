//! Temporal alignment of multivariate sequences by maximizing squared-loss
//! mutual information (SMI) between the aligned samples.
//!
//! The crate is `no_std` (it needs `alloc`) and carries only numerics:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`seqcore`] | [`Sequence`], [`AlignmentPath`], path validation and repair |
//! | [`lsmi`] | Gaussian kernels, density-ratio fitting, SMI estimate, K-fold CV |
//! | [`warp`] | distance-minimizing DTW and the reward-maximizing DP |
//! | [`lsdtw`] | the alternating estimate/maximize alignment loop |
//! | [`ctw`] | canonical time warping baseline (regularized CCA + DTW) |
//! | [`evalbench`] | alignment error, synthetic generators, retrieval protocol |
//!
//! File formats, the command-line front end and benchmark persistence live in
//! the `lsdtw-cli` crate.
//!
//! Every index stored in this crate is 0-based. Conversions to the 1-based
//! indices used on external surfaces go through
//! [`AlignmentPath::from_one_based`] and [`AlignmentPath::to_one_based`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod ctw;
mod error;
pub mod evalbench;
pub mod lsdtw;
pub mod lsmi;
mod math;
pub mod seqcore;
pub mod warp;

pub use error::{Error, Result};
pub use seqcore::{AlignedPairs, AlignmentPath, PathViolation, Sequence};
