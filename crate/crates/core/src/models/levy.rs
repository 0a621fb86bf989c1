use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{arithmetic_warning, sampler_error, MAX_EVENTS_PER_CYCLE};
use crate::engine::{CyclePath, PathBuilder, RegenModel};
use crate::error::{Error, Result};
use crate::random::{CycleVectorSampler, DependenceSpec, MarginalSpec, RngStream};

/// One queue: unit-rate drain, compound-Poisson input, and a secondary jump
/// to level `U` whenever the workload empties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyCoordinate {
    /// Poisson rate of input jumps.
    #[serde(default)]
    pub jump_rate: f64,
    /// Law of the input jumps; required when `jump_rate > 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_size: Option<MarginalSpec>,
    /// Law of the restart level `U`.
    pub secondary: MarginalSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyQueueSpec {
    pub coordinates: Vec<LevyCoordinate>,
    /// Joint law of the restart levels `(U^1, ..., U^m)`.
    #[serde(default)]
    pub dependence: DependenceSpec,
}

/// Workloads of parallel queues with dependent secondary jumps.
#[derive(Clone, Debug)]
pub struct LevyQueue {
    coordinates: Vec<LevyCoordinate>,
    restarts: CycleVectorSampler,
}

impl LevyCoordinate {
    /// `lambda * E[B]`, the mean input per unit time.
    pub fn load(&self) -> f64 {
        self.jump_size.as_ref().map_or(0.0, |b| self.jump_rate * b.mean())
    }
}

pub fn build_levy_queue(spec: &LevyQueueSpec) -> Result<LevyQueue> {
    if spec.coordinates.is_empty() {
        return Err(Error::config("coordinates", "need at least one coordinate"));
    }
    for (i, c) in spec.coordinates.iter().enumerate() {
        let at = |f: &str| format!("coordinates[{i}].{f}");
        if !(c.jump_rate.is_finite() && c.jump_rate >= 0.0) {
            return Err(Error::config(at("jump_rate"), "must be finite and >= 0"));
        }
        match &c.jump_size {
            Some(b) => b.validate().map_err(|e| e.under(&at("jump_size")))?,
            None if c.jump_rate > 0.0 => return Err(Error::config(at("jump_size"), "required when jump_rate > 0")),
            None => {}
        }
        if c.load() >= 1.0 {
            return Err(Error::config(
                at("jump_rate"),
                format!("stability invariant violated: jump_rate * mean(jump_size) = {} must be < 1", c.load()),
            ));
        }
    }
    let restarts =
        CycleVectorSampler::new(&spec.dependence, spec.coordinates.iter().map(|c| c.secondary.clone()).collect())
            .map_err(|e| sampler_error(e, "secondary"))?;
    Ok(LevyQueue { coordinates: spec.coordinates.clone(), restarts })
}

impl LevyQueue {
    /// `E[U] / (1 - lambda E[B])`, the first-passage mean of one cycle.
    pub fn cycle_mean(&self, i: usize) -> f64 {
        self.restarts.coordinate_mean(i) / (1.0 - self.coordinates[i].load())
    }

    /// Workload path of one busy cycle started at `level`.
    pub fn first_passage_path(&self, i: usize, level: f64, rng: &mut RngStream) -> Result<CyclePath> {
        let c = &self.coordinates[i];
        let mut builder = PathBuilder::new(1);
        builder.segment(0.0, &[level], &[-1.0]);
        let mut level = level;
        let mut s = 0.0;
        let mut events = 0u64;
        if c.jump_rate > 0.0 {
            let jumps = c.jump_size.as_ref().expect("validated");
            loop {
                let wait: f64 = Exp1.sample(rng);
                let wait = wait / c.jump_rate;
                if wait >= level || wait <= 0.0 {
                    break;
                }
                events += 1;
                if events > MAX_EVENTS_PER_CYCLE {
                    return Err(Error::Budget(format!("queue {i} did not empty within {MAX_EVENTS_PER_CYCLE} jumps")));
                }
                s += wait;
                level = level - wait + jumps.sample(rng);
                builder.segment(s, &[level], &[-1.0]);
            }
        }
        builder.finish(s + level)
    }
}

impl RegenModel for LevyQueue {
    fn name(&self) -> &'static str {
        "levy_queue"
    }

    fn coordinates(&self) -> usize {
        self.coordinates.len()
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn cycle_means(&self) -> Vec<f64> {
        (0..self.coordinates.len()).map(|i| self.cycle_mean(i)).collect()
    }

    fn warnings(&self) -> Vec<String> {
        self.coordinates
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                self.restarts.coordinate_arithmetic(*i)
                    && (c.jump_rate == 0.0 || c.jump_size.as_ref().is_some_and(|b| b.is_arithmetic()))
            })
            .map(|(i, _)| arithmetic_warning(i))
            .collect()
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        out.clear();
        let mut levels: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, self.coordinates.len());
        self.restarts.sample_into(rng, &mut levels);
        for (i, &u) in levels.iter().enumerate() {
            out.push(self.first_passage_path(i, u, rng)?);
        }
        Ok(())
    }
}
