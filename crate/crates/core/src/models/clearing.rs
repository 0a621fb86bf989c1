use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{arithmetic_warning, sampler_error, MAX_EVENTS_PER_CYCLE};
use crate::engine::{CyclePath, PathBuilder, RegenModel};
use crate::error::{Error, Result};
use crate::random::{CycleVectorSampler, DependenceSpec, MarginalSpec, RngStream};

/// Content accumulated by a subordinator (drift plus compound-Poisson jumps)
/// since the last clearing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClearingCoordinate {
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_size: Option<MarginalSpec>,
    /// Law of the time between clearings.
    pub clearing: MarginalSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClearingSpec {
    pub coordinates: Vec<ClearingCoordinate>,
    /// Joint law of the clearing inter-times.
    #[serde(default)]
    pub dependence: DependenceSpec,
}

#[derive(Clone, Debug)]
pub struct Clearing {
    coordinates: Vec<ClearingCoordinate>,
    clearings: CycleVectorSampler,
}

impl ClearingCoordinate {
    /// Mean input rate `d + lambda E[B]`.
    pub fn input_rate(&self) -> f64 {
        self.drift + self.jump_size.as_ref().map_or(0.0, |b| self.jump_rate * b.mean())
    }
}

pub fn build_clearing(spec: &ClearingSpec) -> Result<Clearing> {
    if spec.coordinates.is_empty() {
        return Err(Error::config("coordinates", "need at least one coordinate"));
    }
    for (i, c) in spec.coordinates.iter().enumerate() {
        let at = |f: &str| format!("coordinates[{i}].{f}");
        if !(c.drift.is_finite() && c.drift >= 0.0) {
            return Err(Error::config(at("drift"), "must be finite and >= 0"));
        }
        if !(c.jump_rate.is_finite() && c.jump_rate >= 0.0) {
            return Err(Error::config(at("jump_rate"), "must be finite and >= 0"));
        }
        match &c.jump_size {
            Some(b) => b.validate().map_err(|e| e.under(&at("jump_size")))?,
            None if c.jump_rate > 0.0 => return Err(Error::config(at("jump_size"), "required when jump_rate > 0")),
            None => {}
        }
        if !(c.input_rate() > 0.0) {
            return Err(Error::config(
                at("drift"),
                "content is degenerate: drift + jump_rate * mean(jump_size) must be > 0",
            ));
        }
    }
    let clearings =
        CycleVectorSampler::new(&spec.dependence, spec.coordinates.iter().map(|c| c.clearing.clone()).collect())
            .map_err(|e| sampler_error(e, "clearing"))?;
    Ok(Clearing { coordinates: spec.coordinates.clone(), clearings })
}

impl Clearing {
    /// `(d + lambda E[B]) * E[T^2] / (2 E[T])`: input rate times mean age.
    pub fn stationary_mean(&self, i: usize) -> f64 {
        self.coordinates[i].input_rate() * self.clearings.coordinate_second_moment(i)
            / (2.0 * self.clearings.coordinate_mean(i))
    }

    fn content_path(&self, i: usize, length: f64, rng: &mut RngStream) -> Result<CyclePath> {
        let c = &self.coordinates[i];
        let mut builder = PathBuilder::new(1);
        builder.segment(0.0, &[0.0], &[c.drift]);
        if c.jump_rate > 0.0 {
            let jumps = c.jump_size.as_ref().expect("validated");
            let (mut last, mut level) = (0.0, 0.0);
            let mut s = 0.0;
            let mut events = 0u64;
            loop {
                let wait: f64 = Exp1.sample(rng);
                s += wait / c.jump_rate;
                if s >= length {
                    break;
                }
                if s <= last {
                    continue;
                }
                events += 1;
                if events > MAX_EVENTS_PER_CYCLE {
                    return Err(Error::Budget(format!(
                        "clearing cycle of coordinate {i} exceeded {MAX_EVENTS_PER_CYCLE} jumps"
                    )));
                }
                level += c.drift * (s - last) + jumps.sample(rng);
                last = s;
                builder.segment(s, &[level], &[c.drift]);
            }
        }
        builder.finish(length)
    }
}

impl RegenModel for Clearing {
    fn name(&self) -> &'static str {
        "clearing"
    }

    fn coordinates(&self) -> usize {
        self.coordinates.len()
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn cycle_means(&self) -> Vec<f64> {
        (0..self.coordinates.len()).map(|i| self.clearings.coordinate_mean(i)).collect()
    }

    fn warnings(&self) -> Vec<String> {
        (0..self.coordinates.len())
            .filter(|i| self.clearings.coordinate_arithmetic(*i))
            .map(arithmetic_warning)
            .collect()
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        out.clear();
        let mut lengths: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, self.coordinates.len());
        self.clearings.sample_into(rng, &mut lengths);
        for (i, &len) in lengths.iter().enumerate() {
            out.push(self.content_path(i, len, rng)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{renewal_reward_estimate, Realization, TestFn};
    use crate::random::spawn_stream;

    pub(crate) fn drift_only(clearing: MarginalSpec) -> ClearingCoordinate {
        ClearingCoordinate { drift: 1.0, jump_rate: 0.0, jump_size: None, clearing }
    }

    #[test]
    fn sawtooth_with_unit_cycles() {
        let model = build_clearing(&ClearingSpec {
            coordinates: vec![drift_only(MarginalSpec::deterministic(1.0))],
            dependence: DependenceSpec::Independent,
        })
        .unwrap();
        let mut r = Realization::new(&model, spawn_stream(0, 0));
        assert_eq!(r.evaluate_at(0, 2.5).unwrap(), vec![0.5]);
        assert_eq!(r.evaluate_at(0, 2.0).unwrap(), vec![0.0]);
        assert_eq!(r.evaluate_at(0, 7.25).unwrap(), vec![0.25]);
    }

    #[test]
    fn drift_content_mean_is_mean_age() {
        // Oracle: E[T^2] / (2 E[T]) = 1 for exp(1) clearings.
        let model = build_clearing(&ClearingSpec {
            coordinates: vec![drift_only(MarginalSpec::exponential(1.0))],
            dependence: DependenceSpec::Independent,
        })
        .unwrap();
        let est = renewal_reward_estimate(&model, 0, &TestFn::Identity { component: 0 }, 100_000, spawn_stream(1, 0))
            .unwrap();
        assert!((est.estimate - 1.0).abs() <= 3.0 * est.se, "{est:?}");
        assert_eq!(model.stationary_mean(0), 1.0);
    }

    #[test]
    fn jump_content_mean() {
        // d = 0, lambda = 1, B = 1: E[X] = lambda E[B] E[age] = 1.
        let model = build_clearing(&ClearingSpec {
            coordinates: vec![ClearingCoordinate {
                drift: 0.0,
                jump_rate: 1.0,
                jump_size: Some(MarginalSpec::deterministic(1.0)),
                clearing: MarginalSpec::exponential(1.0),
            }],
            dependence: DependenceSpec::Independent,
        })
        .unwrap();
        let est = renewal_reward_estimate(&model, 0, &TestFn::Identity { component: 0 }, 100_000, spawn_stream(2, 0))
            .unwrap();
        assert!((est.estimate - 1.0).abs() <= 3.0 * est.se, "{est:?}");
    }

    #[test]
    fn content_is_nondecreasing_and_resets() {
        let model = build_clearing(&ClearingSpec {
            coordinates: vec![ClearingCoordinate {
                drift: 0.5,
                jump_rate: 2.0,
                jump_size: Some(MarginalSpec::exponential(1.0)),
                clearing: MarginalSpec::gamma(2.0, 1.0),
            }],
            dependence: DependenceSpec::Independent,
        })
        .unwrap();
        let mut rng = spawn_stream(3, 0);
        let mut out = Vec::new();
        for _ in 0..1000 {
            model.generate_cycle(&mut rng, &mut out).unwrap();
            let p = &out[0];
            assert_eq!(p.eval(0.0), vec![0.0]);
            let mut prev = 0.0;
            for k in 0..=40 {
                let x = p.eval(p.length() * k as f64 / 40.0)[0];
                assert!(x >= prev);
                prev = x;
            }
        }
    }

    #[test]
    fn degenerate_content_rejected() {
        let err = build_clearing(&ClearingSpec {
            coordinates: vec![ClearingCoordinate {
                drift: 0.0,
                jump_rate: 0.0,
                jump_size: None,
                clearing: MarginalSpec::exponential(1.0),
            }],
            dependence: DependenceSpec::Independent,
        })
        .unwrap_err();
        assert!(err.to_string().starts_with("coordinates[0].drift"));
    }

    #[test]
    fn lattice_clearings_warn() {
        let model = build_clearing(&ClearingSpec {
            coordinates: vec![drift_only(MarginalSpec::lattice(1.0, vec![0.5, 0.5]))],
            dependence: DependenceSpec::Independent,
        })
        .unwrap();
        assert!(model.warnings()[0].contains("arithmetic cycle-length distribution"));
    }
}
