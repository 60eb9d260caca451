//! Dense linear-algebra kernels.

mod blue;
mod lq;
mod matrix;
mod pinv;
mod solve;
mod svd;

pub use blue::{blue_pinv, constrained_wls, KKT_FALLBACK_CONDITION};
pub use lq::{lq_factor, lq_lower, null_space_rows, LqFactors};
pub use matrix::{add_vec, axpy, dot, norm2, norm_inf, sub_vec, Matrix};
pub use pinv::{pinv, pinv_rank, DEFAULT_PINV_TOL};
pub use solve::{condition_number, forward_substitute, inverse, solve, Cholesky, Lu};
pub use svd::{
    numerical_rank, singular_values, svd_full, svd_left, svd_partition, PartitionedSvd,
    SvdFactors,
};
