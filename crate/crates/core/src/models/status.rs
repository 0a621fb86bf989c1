use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{arithmetic_warning, sampler_error};
use crate::engine::{CyclePath, RegenModel, TestFn};
use crate::error::{Error, Result};
use crate::numerics::integrate_with_breaks;
use crate::random::{CycleVectorSampler, DependenceSpec, MarginalSpec, RngStream};
use crate::renewal::equilibrium_survival;

/// One update source with its private channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusSource {
    /// Law of the time between generated updates.
    pub inter_update: MarginalSpec,
    /// Law of the update size in bytes.
    pub update_size: MarginalSpec,
    /// Channel capacity in bytes per unit time.
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusSpec {
    pub sources: Vec<StatusSource>,
    /// Joint law of the inter-update times across sources.
    #[serde(default)]
    pub dependence: DependenceSpec,
}

/// Multi-source status updating. The state of source `i` is
/// `(age, Y / c)`: the age of its most recent update and the transfer time
/// that update needs. The source is up to date iff `age > Y / c`.
#[derive(Clone, Debug)]
pub struct StatusModel {
    sources: Vec<StatusSource>,
    arrivals: CycleVectorSampler,
}

pub fn build_status(spec: &StatusSpec) -> Result<StatusModel> {
    if spec.sources.is_empty() {
        return Err(Error::config("sources", "need at least one source"));
    }
    for (i, s) in spec.sources.iter().enumerate() {
        if !(s.capacity.is_finite() && s.capacity > 0.0) {
            return Err(Error::config(format!("sources[{i}].capacity"), "must be finite and > 0"));
        }
        s.update_size.validate().map_err(|e| e.under(&format!("sources[{i}].update_size")))?;
    }
    let arrivals =
        CycleVectorSampler::new(&spec.dependence, spec.sources.iter().map(|s| s.inter_update.clone()).collect())
            .map_err(|e| sampler_error(e, "inter_update").rename_root("coordinates", "sources"))?;
    Ok(StatusModel { sources: spec.sources.clone(), arrivals })
}

trait RenameRoot {
    fn rename_root(self, from: &str, to: &str) -> Self;
}

impl RenameRoot for Error {
    fn rename_root(self, from: &str, to: &str) -> Self {
        match self {
            Error::Config { path, message } => match path.strip_prefix(from) {
                Some(rest) => Error::Config { path: format!("{to}{rest}"), message },
                None => Error::Config { path, message },
            },
            other => other,
        }
    }
}

impl StatusModel {
    /// Test function of the "source is updated" indicator.
    pub fn updated_indicator() -> TestFn {
        TestFn::updated()
    }
}

impl RegenModel for StatusModel {
    fn name(&self) -> &'static str {
        "status"
    }

    fn coordinates(&self) -> usize {
        self.sources.len()
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn cycle_means(&self) -> Vec<f64> {
        (0..self.sources.len()).map(|i| self.arrivals.coordinate_mean(i)).collect()
    }

    fn warnings(&self) -> Vec<String> {
        (0..self.sources.len()).filter(|i| self.arrivals.coordinate_arithmetic(*i)).map(arithmetic_warning).collect()
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        out.clear();
        let mut lengths: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, self.sources.len());
        self.arrivals.sample_into(rng, &mut lengths);
        for (source, &len) in self.sources.iter().zip(&lengths) {
            // The update that opens this cycle is the one in transit during it.
            let transfer = source.update_size.sample(rng) / source.capacity;
            out.push(CyclePath::linear(len, &[0.0, transfer], &[1.0, 0.0])?);
        }
        Ok(())
    }
}

/// A point beyond which `P(X > x) < 1e-16`.
fn tail_cutoff(spec: &MarginalSpec) -> f64 {
    if let Some(max) = spec.support_max() {
        return max;
    }
    let mut x = spec.mean().max(f64::MIN_POSITIVE);
    while spec.survival(x) > 1e-16 {
        x *= 2.0;
    }
    x
}

/// `E[1 - F_e(Y / c)]` for one source.
pub fn updated_probability(source: &StatusSource) -> Result<f64> {
    let t = &source.inter_update;
    let y = &source.update_size;
    let c = source.capacity;
    match *y {
        MarginalSpec::Deterministic { value } => Ok(equilibrium_survival(t, value / c)),
        MarginalSpec::Lattice { span, ref weights } => {
            Ok(weights.iter().enumerate().map(|(k, w)| w * equilibrium_survival(t, span * (k + 1) as f64 / c)).sum())
        }
        _ => {
            // E h(Y) = 1 - (1/(c mu)) integral_0^inf P(T > y/c) P(Y > y) dy
            // for h = 1 - F_e(./c), whose derivative is -P(T > y/c)/(c mu).
            let mu = t.mean();
            let upper = tail_cutoff(y).min(c * tail_cutoff(t));
            let mut breaks = y.breakpoints();
            breaks.extend(t.breakpoints().into_iter().map(|b| b * c));
            let integral =
                integrate_with_breaks(|u| t.survival(u / c) * y.survival(u), 0.0, upper, &breaks, 1e-10 * c * mu)?;
            Ok((1.0 - integral / (c * mu)).clamp(0.0, 1.0))
        }
    }
}

/// `pi = prod_i E[1 - F_e^i(Y^i / c_i)]`, the limiting probability that every
/// source is up to date.
pub fn pi_closed_form(spec: &StatusSpec) -> Result<f64> {
    let model = build_status(spec)?;
    let mut pi = 1.0;
    for i in 0..spec.sources.len() {
        if model.arrivals.coordinate_law(i).is_none() {
            return Err(Error::config(
                "dependence",
                "closed form needs parametric inter-update marginals (not a common shock)",
            ));
        }
        pi *= updated_probability(&spec.sources[i])?;
    }
    Ok(pi)
}
