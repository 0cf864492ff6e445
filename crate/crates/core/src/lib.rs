//! Adaptive matrix online linear optimization over operator-norm balls.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense matrices, Jacobi SVD / eigendecomposition oracles,
//!   Cholesky, and the Newton–Schulz family of spectral kernels.
//! * [`potentials`]: smoothings of the nuclear norm (regularized, stochastic,
//!   hyperbolic) with value/gradient evaluation and an admissibility checker.
//! * [`learners`]: FTL, FTRL, FTPL, FAML and the two Shampoo baselines, with
//!   regret accounting and the regret-decomposition identity.
//! * [`optimizers`]: Muon, Pion and Leon driven through the online-to-nonconvex
//!   reduction, plus the robust matrix sensing objective.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. The `parallel` feature evaluates Monte Carlo samples on the rayon
//! pool; results are reduced in sample order so they are bit-identical to the
//! serial path.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod learners;
pub mod linalg;
pub mod optimizers;
pub mod potentials;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, KernelReport, SymPsdMatrix};
