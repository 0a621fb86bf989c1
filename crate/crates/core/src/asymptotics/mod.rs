//! Time-scaling schedules, the hypothesis check, joint sampling at scaled
//! times and product-form gap statistics.

mod gap;
mod schedule;
mod sweep;

pub use gap::{
    independence_ks2, product_form_gap, GapEstimate, Ks2Result, SampleMatrix, DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_PERMUTATIONS, KS2_GRID, MIN_GAP_REPLICATIONS, MIN_KS2_REPLICATIONS,
};
pub use schedule::{check_hypotheses, liminf_ratio, HypothesisCheck, PairCheck, Schedule, ScheduleSpec, Verdict};
pub use sweep::{
    convergence_sweep, gate, quantile_test_functions, sample_joint, sample_joint_grid, sample_states, GapRow,
    SweepOptions, SweepReport, DEFAULT_QUANTILE_DRAWS, DEFAULT_QUANTILE_LEVELS, GAP_FLOOR,
};
