//! The bundled regenerative models.

mod age;
mod clearing;
mod jackson;
mod levy;
mod status;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use age::{build_age_residual, AgeResidualModel, AgeResidualSpec};
pub use clearing::{build_clearing, Clearing, ClearingCoordinate, ClearingSpec};
pub use jackson::{build_jackson, traffic_solve, JacksonNetwork, JacksonObservation, JacksonSpec};
pub use levy::{build_levy_queue, LevyCoordinate, LevyQueue, LevyQueueSpec};
pub use status::{build_status, pi_closed_form, updated_probability, StatusModel, StatusSource, StatusSpec};

use crate::engine::{ObservedCopies, RegenModel};
use crate::error::{Error, Result};

/// Event budget for a single cycle of any event-driven model.
pub const MAX_EVENTS_PER_CYCLE: u64 = 10_000_000;

pub(crate) fn arithmetic_warning(i: usize) -> String {
    format!("coordinate {i}: arithmetic cycle-length distribution; limits hold only along the lattice")
}

/// Re-roots a cycle-vector sampler error: per-marginal paths `[i].x` become
/// `coordinates[i].{field}.x`, everything else lands under `dependence`.
pub(crate) fn sampler_error(e: Error, field: &str) -> Error {
    match e {
        Error::Config { path, message } => {
            let path = if let Some(rest) = path.strip_prefix('[') {
                let (idx, tail) = rest.split_once(']').unwrap_or((rest, ""));
                format!("coordinates[{idx}].{field}{tail}")
            } else if path.is_empty() {
                "dependence".to_string()
            } else {
                format!("dependence.{path}")
            };
            Error::Config { path, message }
        }
        other => other,
    }
}

/// Any bundled model, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    LevyQueue(LevyQueueSpec),
    Clearing(ClearingSpec),
    Status(StatusSpec),
    Jackson(JacksonSpec),
    AgeResidual(AgeResidualSpec),
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::LevyQueue(_) => "levy_queue",
            ModelSpec::Clearing(_) => "clearing",
            ModelSpec::Status(_) => "status",
            ModelSpec::Jackson(_) => "jackson",
            ModelSpec::AgeResidual(_) => "age_residual",
        }
    }

    /// Validates and builds the model. Config errors are rooted at `model`.
    pub fn build(&self) -> Result<Arc<dyn RegenModel>> {
        self.build_inner().map_err(|e| e.under("model"))
    }

    fn build_inner(&self) -> Result<Arc<dyn RegenModel>> {
        Ok(match self {
            ModelSpec::LevyQueue(s) => Arc::new(build_levy_queue(s)?),
            ModelSpec::Clearing(s) => Arc::new(build_clearing(s)?),
            ModelSpec::Status(s) => Arc::new(build_status(s)?),
            ModelSpec::Jackson(s) => Arc::new(build_jackson(s)?),
            ModelSpec::AgeResidual(s) => {
                let model = build_age_residual(s)?;
                match s.observed_copies {
                    Some(k) => Arc::new(ObservedCopies::new(model, 0, k)),
                    None => Arc::new(model),
                }
            }
        })
    }
}
