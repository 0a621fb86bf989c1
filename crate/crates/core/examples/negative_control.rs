//! When two comonotone coordinates have equal cycle means and the same
//! schedule, their renewal epochs coincide and the limit is not a product.
//! The hypothesis gate refuses the run; overriding it shows a large gap.

use regen::asymptotics::{check_hypotheses, convergence_sweep, ScheduleSpec, SweepOptions};
use regen::engine::{RegenModel, TestFn};
use regen::models::{build_clearing, ClearingCoordinate, ClearingSpec};
use regen::random::{DependenceSpec, MarginalSpec};

fn main() -> regen::Result<()> {
    let coordinate =
        ClearingCoordinate { drift: 1.0, jump_rate: 0.0, jump_size: None, clearing: MarginalSpec::exponential(1.0) };
    let model = build_clearing(&ClearingSpec {
        coordinates: vec![coordinate.clone(), coordinate],
        dependence: DependenceSpec::Comonotone,
    })?;
    let schedule = ScheduleSpec::identity(2);
    let check = check_hypotheses(&schedule, &model.cycle_means())?;
    println!("hypotheses {:?}, witness pair {:?}", check.verdict, check.witness);

    let median = TestFn::Indicator { component: 0, threshold: std::f64::consts::LN_2 };
    let tuples = [vec![median.clone(), median]];
    let mut options =
        SweepOptions { replications: 10_000, seed: 1, bootstrap_resamples: 100, allow_hypothesis_fail: false };
    match convergence_sweep(&model, &schedule, &[10.0, 100.0, 1000.0], &tuples, &options) {
        Err(e) => println!("gated: {e} (exit code {})", e.exit_code()),
        Ok(_) => println!("unexpected: the gate did not fire"),
    }
    options.allow_hypothesis_fail = true;
    let report = convergence_sweep(&model, &schedule, &[10.0, 100.0, 1000.0], &tuples, &options)?;
    for row in &report.rows {
        println!("t = {:>6}: gap {:.4} (coupling limit 0.25)", row.t, row.estimate.gap);
    }
    Ok(())
}
