//! Generic construction of `m` regenerative processes from i.i.d. tuples of
//! dependent cycles, and estimators of their limiting laws.

mod estimate;
mod model;
mod path;
mod realization;

pub use estimate::{
    default_burn_in, ratio_estimate, renewal_reward_estimate, sample_stationary, sample_stationary_batch,
    time_average_estimate, z_difference, RatioEstimate, TimeAverage,
};
pub use model::{ObservedCopies, RegenModel};
pub use path::{CyclePath, PathBuilder, TestFn};
pub use realization::{Location, Realization, DEFAULT_CYCLE_BUDGET};

/// `X_i(t)` on a realization, extending it as needed.
pub fn evaluate_at(realization: &mut Realization<'_>, i: usize, t: f64) -> crate::Result<Vec<f64>> {
    realization.evaluate_at(i, t)
}
