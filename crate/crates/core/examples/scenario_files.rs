//! Drive a run from a JSON config, the same way the command-line tool does,
//! and write its CSV/JSON artifacts to a directory.

use regen::scenario::Scenario;

fn main() -> regen::Result<()> {
    let config = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/clearing_stationary.json").into());
    let mut scenario = Scenario::load(config.as_ref())?;
    scenario.config_mut().run.n_cycles = 20_000;
    scenario.config_mut().run.horizon = 2e4;
    let scenario = Scenario::new(scenario.config().clone())?;
    for w in scenario.warnings() {
        println!("warning: {w}");
    }
    let report = scenario.stationary()?;
    let dir = std::env::temp_dir().join("regen-scenario-example");
    for path in scenario.write_stationary(&report, &dir)? {
        println!("wrote {}", path.display());
    }
    println!(
        "renewal-reward {:.4}, time average {:.4}, z = {:.2}",
        report.renewal_reward.estimate, report.time_average.estimate, report.z
    );
    Ok(())
}
