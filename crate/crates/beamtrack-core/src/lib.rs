//! Numerical core for two-dimensional phased-array beam and channel tracking.
//!
//! The crate covers the full analytic stack used by the trackers:
//!
//! * [`array_core`] — planar-array geometry, steering vectors, element pattern;
//! * [`signal_model`] — exploring beamforming matrices, observations and the
//!   three-probe identifiability solver;
//! * [`estimation_theory`] — Fisher information and Cramér–Rao bounds for the
//!   quasi-static and Rayleigh-gain models, with their large-array limits;
//! * [`offset_optimizer`] — multi-start Nelder–Mead search for exploration offsets;
//! * [`trackers`] — the stochastic-Newton trackers, their fast update path with
//!   instrumented operation counting, and two baselines;
//! * [`channel_sim`] — ground-truth channel generation for the three scenario classes.
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature to link the
//! standard library. All randomness is injected through [`rand::Rng`] handles.
//!
//! # Conventions
//!
//! * Complex Gaussian `CN(0, s²)` draws have independent real and imaginary
//!   parts, each with variance `s²/2`.
//! * The real parameter vector of the joint gain/direction state is ordered
//!   `[β_re, β_im, x₁, x₂]` everywhere.
//! * Steering vectors are flattened m-major: entry `(m, n)` lives at `m·N + n`.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]
#![warn(missing_docs)]
// Small fixed-size matrix kernels read best as index loops; negated
// comparisons deliberately treat NaN as invalid input.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod array_core;
pub mod channel_sim;
pub mod error;
pub mod estimation_theory;
pub mod linalg;
pub mod offset_optimizer;
pub mod random;
pub mod signal_model;
pub mod trackers;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
