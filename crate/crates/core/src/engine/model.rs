use std::sync::Arc;

use super::CyclePath;
use crate::error::Result;
use crate::random::RngStream;

/// A generator of i.i.d. cycle tuples `((X^1, T^1), ..., (X^m, T^m))`.
///
/// Coordinates inside one tuple may be arbitrarily dependent. Every call to
/// [`RegenModel::generate_cycle`] must consume fresh randomness from `rng`
/// only, so tuples are i.i.d. along a stream.
pub trait RegenModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of coordinates `m`.
    fn coordinates(&self) -> usize;

    /// Dimension of every coordinate's state vector.
    fn state_dim(&self) -> usize;

    /// Mean cycle length of each coordinate.
    fn cycle_means(&self) -> Vec<f64>;

    /// Human-readable warnings, e.g. arithmetic cycle-length laws.
    fn warnings(&self) -> Vec<String> {
        Vec::new()
    }

    /// Clears `out` and pushes one path per coordinate.
    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()>;
}

impl<M: RegenModel + ?Sized> RegenModel for Arc<M> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn coordinates(&self) -> usize {
        (**self).coordinates()
    }
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn cycle_means(&self) -> Vec<f64> {
        (**self).cycle_means()
    }
    fn warnings(&self) -> Vec<String> {
        (**self).warnings()
    }
    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        (**self).generate_cycle(rng, out)
    }
}

/// One coordinate of a base model observed as several coordinates, so that a
/// single regenerative process can be sampled at several time schedules on
/// the same realization.
pub struct ObservedCopies<M> {
    base: M,
    source: usize,
    copies: usize,
}

impl<M: RegenModel> ObservedCopies<M> {
    pub fn new(base: M, source: usize, copies: usize) -> Self {
        assert!(source < base.coordinates() && copies >= 1);
        Self { base, source, copies }
    }
}

impl<M: RegenModel> RegenModel for ObservedCopies<M> {
    fn name(&self) -> &'static str {
        self.base.name()
    }

    fn coordinates(&self) -> usize {
        self.copies
    }

    fn state_dim(&self) -> usize {
        self.base.state_dim()
    }

    fn cycle_means(&self) -> Vec<f64> {
        vec![self.base.cycle_means()[self.source]; self.copies]
    }

    fn warnings(&self) -> Vec<String> {
        self.base.warnings()
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        self.base.generate_cycle(rng, out)?;
        let path = out.swap_remove(self.source);
        out.clear();
        out.extend(std::iter::repeat_n(path, self.copies));
        Ok(())
    }
}
