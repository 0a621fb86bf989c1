//! Two Levy-driven storage queues sharing a common shock in their initial
//! (secondary) input. Shows cycle means and the stationary workload.

use regen::engine::{renewal_reward_estimate, time_average_estimate, RegenModel, TestFn};
use regen::models::{build_levy_queue, LevyCoordinate, LevyQueueSpec};
use regen::random::{spawn_stream, stream_index, DependenceSpec, MarginalSpec, Purpose};

fn main() -> regen::Result<()> {
    let coordinates = vec![
        LevyCoordinate {
            jump_rate: 0.5,
            jump_size: Some(MarginalSpec::exponential(1.0)),
            secondary: MarginalSpec::exponential(1.0),
        },
        LevyCoordinate {
            jump_rate: 0.25,
            jump_size: Some(MarginalSpec::exponential(0.5)),
            secondary: MarginalSpec::exponential(1.0),
        },
    ];
    let queue =
        build_levy_queue(&LevyQueueSpec { coordinates: coordinates.clone(), dependence: DependenceSpec::Comonotone })?;
    for (i, c) in coordinates.iter().enumerate() {
        println!("queue {i}: load {:.2}, cycle mean {:.3}", c.load(), queue.cycle_mean(i));
    }

    let mut rng = spawn_stream(3, 0);
    let mut paths = Vec::new();
    let (mut sum, n) = ([0.0; 2], 50_000);
    for _ in 0..n {
        queue.generate_cycle(&mut rng, &mut paths)?;
        sum[0] += paths[0].length();
        sum[1] += paths[1].length();
    }
    println!("simulated cycle means: {:.3}, {:.3}", sum[0] / n as f64, sum[1] / n as f64);

    let workload = TestFn::Identity { component: 0 };
    for i in 0..2 {
        let rr = renewal_reward_estimate(
            &queue,
            i,
            &workload,
            n,
            spawn_stream(3, stream_index(Purpose::RenewalReward, i as u64)),
        )?;
        let ta = time_average_estimate(
            &queue,
            i,
            &workload,
            5e4,
            spawn_stream(3, stream_index(Purpose::TimeAverage, i as u64)),
        )?;
        println!(
            "queue {i} mean workload: renewal-reward {:.4} +/- {:.4}, time average {:.4} +/- {:.4}",
            rr.estimate, rr.se, ta.estimate, ta.se
        );
    }
    Ok(())
}
