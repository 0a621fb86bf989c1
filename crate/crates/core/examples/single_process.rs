//! One renewal process looked at at times 2t and 3t. The two ages are
//! asymptotically independent, each with the equilibrium law. Also runs the
//! two-sample KS diagnostic on the raw ages.

use regen::asymptotics::{independence_ks2, product_form_gap, sample_joint, Schedule, ScheduleSpec};
use regen::engine::TestFn;
use regen::models::{AgeResidualSpec, ModelSpec};
use regen::numerics::ks_statistic;
use regen::random::{DependenceSpec, MarginalSpec};
use regen::renewal::equilibrium_cdf;

fn main() -> regen::Result<()> {
    let law = MarginalSpec::gamma(2.0, 1.0);
    let model = ModelSpec::AgeResidual(AgeResidualSpec {
        cycle: vec![law.clone()],
        dependence: DependenceSpec::Independent,
        observed_copies: Some(2),
    })
    .build()?;
    let schedule = ScheduleSpec::new(vec![Schedule::affine(2.0, 0.0), Schedule::affine(3.0, 0.0)]);
    let age = TestFn::Identity { component: 0 };
    for t in [1.0, 5.0, 50.0] {
        let ages = sample_joint(model.as_ref(), &schedule, t, &[age.clone(), age.clone()], 20_000, 4)?;
        let ks: Vec<f64> = (0..2).map(|i| ks_statistic(&ages.column(i), |x| equilibrium_cdf(&law, x))).collect();
        let ks2 = independence_ks2(&ages, 100, 4)?;
        let gap = product_form_gap(&ages, 100, 4, 0)?;
        println!(
            "t = {t:>4}: marginal KS {:.4} / {:.4}, joint-vs-product KS {:.4} (p = {:.2}), mean-product gap {:.4}",
            ks[0], ks[1], ks2.statistic, ks2.p_value, gap.gap
        );
    }
    Ok(())
}
