use rayon::prelude::*;
use serde::Serialize;

use super::{Realization, RegenModel, TestFn, DEFAULT_CYCLE_BUDGET};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::random::{spawn_stream, stream_index, Purpose, RngStream};

/// A stationary expectation estimated from regenerative cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub estimate: f64,
    /// Delta-method standard error.
    pub se: f64,
    pub cycles: usize,
    pub mean_cycle_length: f64,
}

/// Ratio estimate `sum(Y) / sum(X)` with its delta-method standard error,
/// from per-cycle rewards `Y` and lengths `X`.
pub fn ratio_estimate(rewards: &[f64], lengths: &[f64]) -> RatioEstimate {
    let n = rewards.len();
    let mut ys = CompensatedSum::new();
    let mut xs = CompensatedSum::new();
    for (y, x) in rewards.iter().zip(lengths) {
        ys.add(*y);
        xs.add(*x);
    }
    let ratio = ys.value() / xs.value();
    let mean_x = xs.value() / n as f64;
    let se = if n > 1 {
        let s2 = rewards.iter().zip(lengths).map(|(y, x)| (y - ratio * x).powi(2)).sum::<f64>() / (n - 1) as f64;
        (s2 / n as f64).sqrt() / mean_x
    } else {
        f64::NAN
    };
    RatioEstimate { estimate: ratio, se, cycles: n, mean_cycle_length: mean_x }
}

fn check_coordinate(model: &dyn RegenModel, i: usize, g: &TestFn) -> Result<()> {
    if i >= model.coordinates() {
        return Err(Error::Dimension(format!(
            "coordinate {i} requested from a model with {} coordinates",
            model.coordinates()
        )));
    }
    g.validate(model.state_dim())
}

/// Estimates `E g(X_i(inf)) = E[integral_0^T g(X(s)) ds] / E[T]` from
/// `n_cycles` i.i.d. cycles of coordinate `i`.
pub fn renewal_reward_estimate(
    model: &dyn RegenModel,
    i: usize,
    g: &TestFn,
    n_cycles: usize,
    mut rng: RngStream,
) -> Result<RatioEstimate> {
    check_coordinate(model, i, g)?;
    if n_cycles < 100 {
        return Err(Error::Precondition(format!("renewal-reward needs n_cycles >= 100, got {n_cycles}")));
    }
    if n_cycles as u64 > DEFAULT_CYCLE_BUDGET {
        return Err(Error::Budget(format!("{n_cycles} cycles exceed the per-run budget")));
    }
    let mut rewards = Vec::with_capacity(n_cycles);
    let mut lengths = Vec::with_capacity(n_cycles);
    let mut paths = Vec::with_capacity(model.coordinates());
    for _ in 0..n_cycles {
        model.generate_cycle(&mut rng, &mut paths)?;
        let path = &paths[i];
        let y = path.integral(g);
        if !y.is_finite() {
            return Err(Error::Numerical("cycle integral is not finite".into()));
        }
        rewards.push(y);
        lengths.push(path.length());
    }
    if let Some(c) = g.constant() {
        return Ok(RatioEstimate {
            estimate: c,
            se: 0.0,
            cycles: n_cycles,
            mean_cycle_length: lengths.iter().sum::<f64>() / n_cycles as f64,
        });
    }
    Ok(ratio_estimate(&rewards, &lengths))
}

/// Ergodic time average along one realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeAverage {
    pub estimate: f64,
    /// Regenerative standard error from the completed cycles.
    pub se: f64,
    pub complete_cycles: usize,
}

/// `(1/H) integral_0^H g(X_i(s)) ds` along one realization, `H >= 100 mu_i`.
pub fn time_average_estimate(
    model: &dyn RegenModel,
    i: usize,
    g: &TestFn,
    horizon: f64,
    mut rng: RngStream,
) -> Result<TimeAverage> {
    check_coordinate(model, i, g)?;
    let mu = model.cycle_means()[i];
    if !(horizon >= 100.0 * mu) {
        return Err(Error::Precondition(format!(
            "time average needs horizon >= 100 * mean cycle length = {}, got {horizon}",
            100.0 * mu
        )));
    }
    let mut epoch = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    let mut rewards = Vec::new();
    let mut lengths = Vec::new();
    let mut paths = Vec::with_capacity(model.coordinates());
    loop {
        if rewards.len() as u64 >= DEFAULT_CYCLE_BUDGET {
            return Err(Error::Budget(format!("horizon {horizon} needs more than {DEFAULT_CYCLE_BUDGET} cycles")));
        }
        model.generate_cycle(&mut rng, &mut paths)?;
        let path = &paths[i];
        let start = epoch.value();
        if start + path.length() <= horizon {
            let y = path.integral(g);
            if !y.is_finite() {
                return Err(Error::Numerical("cycle integral is not finite".into()));
            }
            total.add(y);
            rewards.push(y);
            lengths.push(path.length());
            epoch.add(path.length());
        } else {
            total.add(path.integral_upto(g, horizon - start));
            break;
        }
    }
    if let Some(c) = g.constant() {
        return Ok(TimeAverage { estimate: c, se: 0.0, complete_cycles: rewards.len() });
    }
    let se = if rewards.len() > 1 { ratio_estimate(&rewards, &lengths).se } else { f64::NAN };
    Ok(TimeAverage { estimate: total.value() / horizon, se, complete_cycles: rewards.len() })
}

/// `max(1e3, 100 * max mu_i)`.
pub fn default_burn_in(means: &[f64]) -> f64 {
    means.iter().fold(1e3_f64, |acc, mu| acc.max(100.0 * mu))
}

/// One draw of `X_i(t_burn)` from a fresh realization.
pub fn sample_stationary(model: &dyn RegenModel, i: usize, t_burn: f64, rng: RngStream) -> Result<Vec<f64>> {
    check_coordinate(model, i, &TestFn::One)?;
    let mu = model.cycle_means()[i];
    if !(t_burn >= 100.0 * mu) {
        return Err(Error::Precondition(format!(
            "burn-in must be >= 100 * mean cycle length = {}, got {t_burn}",
            100.0 * mu
        )));
    }
    Realization::streaming(model, rng).evaluate_at(i, t_burn)
}

/// `n` i.i.d. stationary draws of coordinate `i`, replication `k` on stream
/// `(seed, stream_index(purpose, k))`. Output order is independent of the
/// thread count.
pub fn sample_stationary_batch(
    model: &dyn RegenModel,
    i: usize,
    t_burn: f64,
    n: usize,
    seed: u64,
    purpose: Purpose,
) -> Result<Vec<Vec<f64>>> {
    (0..n as u64)
        .into_par_iter()
        .map(|k| sample_stationary(model, i, t_burn, spawn_stream(seed, stream_index(purpose, k))))
        .collect()
}

/// `(a - b) / sqrt(se_a^2 + se_b^2)`, 0 when both the difference and the
/// standard errors vanish.
pub fn z_difference(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let diff = a - b;
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}
