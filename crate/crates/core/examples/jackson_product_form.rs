//! A three-station Jackson network with feedback. Stations observed at the
//! same instant have a product-form stationary law; the example compares
//! the empirical joint mass of (n1, n2) with the product of geometrics.

use regen::asymptotics::{sample_states, ScheduleSpec};
use regen::engine::RegenModel;
use regen::models::{build_jackson, traffic_solve, JacksonObservation, JacksonSpec};

fn main() -> regen::Result<()> {
    let spec = JacksonSpec {
        arrival_rates: vec![0.3, 0.1, 0.0],
        service_rates: vec![1.0, 1.2, 0.9],
        routing: vec![vec![0.0, 0.6, 0.3], vec![0.2, 0.0, 0.5], vec![0.1, 0.0, 0.0]],
        observations: vec![JacksonObservation { alpha: 1.0, beta: 0.0 }],
    };
    let rates = traffic_solve(&spec)?;
    let network = build_jackson(&spec)?;
    for j in 0..network.stations() {
        println!("station {j}: throughput {:.4}, utilization {:.4}", rates[j], network.utilization(j));
    }
    println!("mean time between empty epochs: {:.3}", network.cycle_means()[0]);

    let n = 20_000;
    let schedule = ScheduleSpec::identity(1);
    let first = sample_states(&network, &schedule, 300.0, 0, n, 2)?;
    let second = sample_states(&network, &schedule, 300.0, 1, n, 2)?;
    let (a, b) = (first.column(0), second.column(0));
    let mut tv = 0.0;
    let mut covered = 0.0;
    for x in 0..8u64 {
        for y in 0..8u64 {
            let p = network.stationary_pmf(0, x) * network.stationary_pmf(1, y);
            let hits = a.iter().zip(&b).filter(|(u, v)| **u == x as f64 && **v == y as f64).count();
            tv += (hits as f64 / n as f64 - p).abs();
            covered += p;
        }
    }
    println!("TV distance on {{0..7}}^2 (mass {covered:.3}) to product form: {:.4}", 0.5 * tv);
    Ok(())
}
