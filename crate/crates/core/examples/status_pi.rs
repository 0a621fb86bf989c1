//! Probability that every source of a status-update system is "fresh" at a
//! large time, compared with its product closed form.

use regen::asymptotics::{sample_joint, ScheduleSpec};
use regen::engine::TestFn;
use regen::models::{build_status, pi_closed_form, StatusSource, StatusSpec};
use regen::random::{DependenceSpec, MarginalSpec};

fn main() -> regen::Result<()> {
    let source = |inter: MarginalSpec, size: f64| StatusSource {
        inter_update: inter,
        update_size: MarginalSpec::deterministic(size),
        capacity: 1.0,
    };
    let spec = StatusSpec {
        sources: vec![
            source(MarginalSpec::exponential(1.0), 0.5),
            source(MarginalSpec::gamma(2.0, 1.4), 1.0),
            source(MarginalSpec::shifted_uniform(0.2, 1.8), 0.3),
        ],
        dependence: DependenceSpec::Independent,
    };
    let closed = pi_closed_form(&spec)?;
    let model = build_status(&spec)?;
    let n = 40_000;
    let indicators = vec![TestFn::updated(); spec.sources.len()];
    let samples = sample_joint(&model, &ScheduleSpec::identity(3), 500.0, &indicators, n, 9)?;
    let simulated = samples.row_products().iter().sum::<f64>() / n as f64;
    let se = (closed * (1.0 - closed) / n as f64).sqrt();
    println!("closed form {closed:.5}, simulated {simulated:.5}, z = {:.2}", (simulated - closed) / se);
    for i in 0..3 {
        let p = samples.column(i).iter().sum::<f64>() / n as f64;
        println!("  source {i} fresh with probability {p:.4}");
    }
    Ok(())
}
