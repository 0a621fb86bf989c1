use rayon::prelude::*;
use serde::Serialize;

use super::gap::{product_form_gap, GapEstimate, SampleMatrix};
use super::schedule::{check_hypotheses, HypothesisCheck, ScheduleSpec};
use crate::engine::{default_burn_in, Realization, RegenModel, TestFn};
use crate::error::{Error, Result};
use crate::numerics::spearman;
use crate::random::{spawn_stream, stream_index, Purpose};

/// Absolute floor of the sweep's pass threshold `max(floor, 3 se)`.
pub const GAP_FLOOR: f64 = 0.02;
pub const DEFAULT_QUANTILE_DRAWS: usize = 10_000;
pub const DEFAULT_QUANTILE_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

/// Runs the hypothesis check for `model` and enforces the gate.
pub fn gate(model: &dyn RegenModel, schedule: &ScheduleSpec, allow_fail: bool) -> Result<HypothesisCheck> {
    let check = check_hypotheses(schedule, &model.cycle_means())?;
    if !check.passed() && !allow_fail {
        let (i, j) = check.witness.unwrap();
        return Err(Error::HypothesisGate(format!(
            "liminf v_{i}/v_{j} does not exceed mu_{i}/mu_{j}; set allow_hypothesis_fail to run anyway"
        )));
    }
    Ok(check)
}

fn check_times(schedule: &ScheduleSpec, t_grid: &[f64]) -> Result<()> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("t_grid", "must be strictly increasing"));
    }
    for &t in t_grid {
        for i in 0..schedule.len() {
            let v = schedule.eval(i, t);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config("t_grid", format!("v_{i}({t}) = {v} is not > 0")));
            }
        }
    }
    Ok(())
}

fn check_tuples(model: &dyn RegenModel, tuples: &[Vec<TestFn>]) -> Result<()> {
    for (k, tuple) in tuples.iter().enumerate() {
        if tuple.len() != model.coordinates() {
            return Err(Error::Dimension(format!(
                "test-function tuple {k} has {} entries for {} coordinates",
                tuple.len(),
                model.coordinates()
            )));
        }
        for (i, f) in tuple.iter().enumerate() {
            f.validate(model.state_dim()).map_err(|e| e.under(&format!("test_functions[{k}][{i}]")))?;
        }
    }
    Ok(())
}

/// A streaming realization on `rng`, recycling the worker's previous one so
/// its buffers are not reallocated per replication.
fn reuse<'a, 'm>(
    slot: &'a mut Option<Realization<'m>>,
    model: &'m dyn RegenModel,
    rng: crate::random::RngStream,
) -> &'a mut Realization<'m> {
    match slot {
        Some(real) => {
            real.reset(rng);
            real
        }
        None => slot.insert(Realization::streaming(model, rng)),
    }
}

/// Joint samples on one realization per replication, at every `t` in the
/// grid: `out[t][tuple]` is an `n x m` matrix of `f_i(X_i(v_i(t)))`.
/// Replication `k` runs on stream `(seed, Replication, k)`.
///
/// The hypothesis gate is not applied here; see [`gate`].
pub fn sample_joint_grid(
    model: &dyn RegenModel,
    schedule: &ScheduleSpec,
    t_grid: &[f64],
    tuples: &[Vec<TestFn>],
    replications: usize,
    seed: u64,
) -> Result<Vec<Vec<SampleMatrix>>> {
    let m = model.coordinates();
    if schedule.len() != m {
        return Err(Error::Dimension(format!("schedule has {} entries for {m} coordinates", schedule.len())));
    }
    check_times(schedule, t_grid)?;
    check_tuples(model, tuples)?;
    let dim = model.state_dim();
    let per_rep: Vec<Vec<f64>> = (0..replications as u64)
        .into_par_iter()
        .map_init(
            || None,
            |slot: &mut Option<Realization<'_>>, k| {
                let real = reuse(slot, model, spawn_stream(seed, stream_index(Purpose::Replication, k)));
                let mut state = vec![0.0; dim];
                let mut row = Vec::with_capacity(t_grid.len() * tuples.len() * m);
                let mut states = vec![0.0; m * dim];
                for &t in t_grid {
                    for i in 0..m {
                        real.evaluate_into(i, schedule.eval(i, t), &mut state)?;
                        states[i * dim..(i + 1) * dim].copy_from_slice(&state);
                    }
                    for tuple in tuples {
                        for (i, f) in tuple.iter().enumerate() {
                            row.push(f.value(&states[i * dim..(i + 1) * dim]));
                        }
                    }
                }
                Ok(row)
            },
        )
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(t_grid.len());
    for ti in 0..t_grid.len() {
        let mut per_tuple = Vec::with_capacity(tuples.len());
        for fi in 0..tuples.len() {
            let offset = (ti * tuples.len() + fi) * m;
            let data: Vec<f64> = per_rep.iter().flat_map(|r| r[offset..offset + m].iter().copied()).collect();
            per_tuple.push(SampleMatrix::new(m, data)?);
        }
        out.push(per_tuple);
    }
    Ok(out)
}

/// `n x m` matrix of `f_i(X_i(v_i(t)))` at a single horizon.
pub fn sample_joint(
    model: &dyn RegenModel,
    schedule: &ScheduleSpec,
    t: f64,
    fs: &[TestFn],
    replications: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    let mut grid = sample_joint_grid(model, schedule, &[t], &[fs.to_vec()], replications, seed)?;
    Ok(grid.pop().unwrap().pop().unwrap())
}

/// Raw states `X_i(v_i(t))`, component `component` of each coordinate.
pub fn sample_states(
    model: &dyn RegenModel,
    schedule: &ScheduleSpec,
    t: f64,
    component: usize,
    replications: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    if component >= model.state_dim() {
        return Err(Error::config("component", format!("state has {} components", model.state_dim())));
    }
    let fs = vec![TestFn::Identity { component }; model.coordinates()];
    sample_joint(model, schedule, t, &fs, replications, seed)
}

/// Indicator tuples `(1{x_i <= q_i(p)})_i` at the stationary `p`-quantiles
/// of each coordinate's `component`, from `draws` realizations observed at
/// `burn_in` (default `max(1e3, 100 max mu)`).
pub fn quantile_test_functions(
    model: &dyn RegenModel,
    component: usize,
    levels: &[f64],
    draws: usize,
    burn_in: Option<f64>,
    seed: u64,
) -> Result<Vec<Vec<TestFn>>> {
    if component >= model.state_dim() {
        return Err(Error::config("component", format!("state has {} components", model.state_dim())));
    }
    if draws == 0 {
        return Err(Error::Precondition("quantile pre-pass needs at least one draw".into()));
    }
    if let Some(p) = levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::config("levels", format!("{p} is not in (0, 1)")));
    }
    let means = model.cycle_means();
    let t_burn = burn_in.unwrap_or_else(|| default_burn_in(&means));
    let floor = 100.0 * means.iter().fold(0.0f64, |a, b| a.max(*b));
    if !(t_burn >= floor) {
        return Err(Error::Precondition(format!("burn-in must be >= 100 * max mean cycle length = {floor}")));
    }
    let m = model.coordinates();
    let dim = model.state_dim();
    let draws_by_rep: Vec<Vec<f64>> = (0..draws as u64)
        .into_par_iter()
        .map_init(
            || None,
            |slot: &mut Option<Realization<'_>>, k| {
                let real = reuse(slot, model, spawn_stream(seed, stream_index(Purpose::QuantilePrepass, k)));
                let mut state = vec![0.0; dim];
                (0..m)
                    .map(|i| {
                        real.evaluate_into(i, t_burn, &mut state)?;
                        Ok(state[component])
                    })
                    .collect()
            },
        )
        .collect::<Result<_>>()?;
    let quantiles: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut xs: Vec<f64> = draws_by_rep.iter().map(|r| r[i]).collect();
            xs.sort_by(f64::total_cmp);
            levels.iter().map(|p| xs[((p * draws as f64).ceil() as usize).clamp(1, draws) - 1]).collect()
        })
        .collect();
    Ok((0..levels.len())
        .map(|l| (0..m).map(|i| TestFn::Indicator { component, threshold: quantiles[i][l] }).collect())
        .collect())
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub t: f64,
    pub tuple: usize,
    #[serde(flatten)]
    pub estimate: GapEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub hypothesis: HypothesisCheck,
    pub rows: Vec<GapRow>,
    /// Spearman correlation of the gap against `t`, per tuple.
    pub trends: Vec<f64>,
    /// Every tuple's gap at the last horizon is below its threshold.
    pub final_pass: bool,
}

impl SweepReport {
    pub fn final_rows(&self) -> impl Iterator<Item = &GapRow> {
        let last = self.rows.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
        self.rows.iter().filter(move |r| r.t == last)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub replications: usize,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub allow_hypothesis_fail: bool,
}

/// Product-form gaps over an increasing grid of horizons.
pub fn convergence_sweep(
    model: &dyn RegenModel,
    schedule: &ScheduleSpec,
    t_grid: &[f64],
    tuples: &[Vec<TestFn>],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if t_grid.len() < 3 {
        return Err(Error::config("t_grid", "a sweep needs at least 3 horizons"));
    }
    if opts.replications < super::gap::MIN_GAP_REPLICATIONS {
        return Err(Error::Precondition(format!(
            "sweep needs at least {} replications, got {}",
            super::gap::MIN_GAP_REPLICATIONS,
            opts.replications
        )));
    }
    let hypothesis = gate(model, schedule, opts.allow_hypothesis_fail)?;
    let samples = sample_joint_grid(model, schedule, t_grid, tuples, opts.replications, opts.seed)?;
    let mut rows = Vec::new();
    for (ti, per_tuple) in samples.iter().enumerate() {
        for (fi, matrix) in per_tuple.iter().enumerate() {
            let unit = (ti * tuples.len() + fi) as u64;
            let estimate = product_form_gap(matrix, opts.bootstrap_resamples, opts.seed, unit)?;
            rows.push(GapRow { t: t_grid[ti], tuple: fi, estimate });
        }
    }
    let trends = (0..tuples.len())
        .map(|fi| {
            let gaps: Vec<f64> = rows.iter().filter(|r| r.tuple == fi).map(|r| r.estimate.gap).collect();
            spearman(t_grid, &gaps)
        })
        .collect();
    let mut report = SweepReport { hypothesis, rows, trends, final_pass: false };
    let pass = report.final_rows().all(|r| r.estimate.passes(GAP_FLOOR));
    report.final_pass = pass;
    Ok(report)
}
