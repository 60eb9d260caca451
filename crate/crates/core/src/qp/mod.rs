//! Convex quadratic programming for the receding-horizon controllers.

mod dense;
mod dual_active_set;
mod tracking;

pub use dense::{dense_kkt_residual, AdmmSolver, DenseQp, QpSettings, QpStatus, RawSolution, WarmStart};
pub use tracking::{kkt_residual, solve_tracking_qp, BoxBounds, QpSolution, TrackingQp, TrackingSolver};
