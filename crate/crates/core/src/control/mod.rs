//! Receding-horizon closed loop, Monte Carlo aggregation and the
//! complexity model of the predictor builds.

mod closed_loop;
mod monte_carlo;
mod scenario;
mod timing;

pub use closed_loop::{
    collect_data, estimate_steady_input, identify, past_sensitivity, performance_index, run_closed_loop, run_closed_loop_timed,
    run_seeds, stage_cost, Clock, ClosedLoop, Identified, NoClock, RunLog,
};
pub use monte_carlo::{monte_carlo, run_seed, McStats, RunOutcome};
pub use scenario::{Scenario, Weights};
pub use timing::{flops_model, ntdpc_workload, siso_benchmark_data, spc_workload, TimingMethod};
