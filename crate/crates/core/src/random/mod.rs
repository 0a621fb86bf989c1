//! Reproducible random streams, marginal laws and dependent cycle vectors.

mod dependence;
mod marginal;
mod stream;

pub use dependence::{sample_cycle_vector, CycleVectorSampler, DependenceSpec};
pub(crate) use marginal::{gamma_p, gamma_q};
pub use marginal::{marginal_mean, sample_marginal, MarginalSpec};
pub use stream::{spawn_stream, stream_index, Purpose, RngStream};
