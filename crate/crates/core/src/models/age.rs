use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{arithmetic_warning, sampler_error};
use crate::engine::{CyclePath, RegenModel};
use crate::error::{Error, Result};
use crate::random::{CycleVectorSampler, DependenceSpec, MarginalSpec, RngStream};

/// Joint age and residual-lifetime processes of `m` dependent renewal
/// processes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgeResidualSpec {
    pub cycle: Vec<MarginalSpec>,
    #[serde(default)]
    pub dependence: DependenceSpec,
    /// Observe the single process `cycle[0]` as this many coordinates, one
    /// per schedule entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_copies: Option<usize>,
}

/// State `(age, residual)`; component 0 is the age.
#[derive(Clone, Debug)]
pub struct AgeResidualModel {
    lengths: CycleVectorSampler,
}

pub fn build_age_residual(spec: &AgeResidualSpec) -> Result<AgeResidualModel> {
    if spec.cycle.is_empty() {
        return Err(Error::config("cycle", "need at least one coordinate"));
    }
    if let Some(k) = spec.observed_copies {
        if spec.cycle.len() != 1 {
            return Err(Error::config("observed_copies", "requires exactly one cycle law"));
        }
        if k == 0 {
            return Err(Error::config("observed_copies", "must be >= 1"));
        }
    }
    let lengths = CycleVectorSampler::new(&spec.dependence, spec.cycle.clone()).map_err(|e| match e {
        Error::Config { path, message } if path.starts_with('[') => Error::config(format!("cycle{path}"), message),
        other => sampler_error(other, "cycle"),
    })?;
    Ok(AgeResidualModel { lengths })
}

impl RegenModel for AgeResidualModel {
    fn name(&self) -> &'static str {
        "age_residual"
    }

    fn coordinates(&self) -> usize {
        self.lengths.dimension()
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn cycle_means(&self) -> Vec<f64> {
        (0..self.lengths.dimension()).map(|i| self.lengths.coordinate_mean(i)).collect()
    }

    fn warnings(&self) -> Vec<String> {
        (0..self.lengths.dimension())
            .filter(|i| self.lengths.coordinate_arithmetic(*i))
            .map(arithmetic_warning)
            .collect()
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        out.clear();
        let mut lengths: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, self.lengths.dimension());
        self.lengths.sample_into(rng, &mut lengths);
        for &len in &lengths {
            out.push(CyclePath::linear(len, &[0.0, len], &[1.0, -1.0])?);
        }
        Ok(())
    }
}
