//! Noise-tolerant data-driven predictive control.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation: dense linear algebra, plant simulation and Hankel assembly,
//! the three multi-step predictors (SVD/BLUE based, least-squares subspace,
//! and LQ based), a dense convex QP solver, and the receding-horizon loop.
//! File formats, the CLI and parallel experiment drivers live in `ntdpc-lab`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod control;
pub mod error;
pub mod hankel;
pub mod linalg;
pub mod noise;
pub mod plant;
pub mod predict;
pub mod qp;
pub mod signal;

pub use error::{Error, Result};
pub use linalg::Matrix;
