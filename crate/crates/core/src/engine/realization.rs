use std::collections::VecDeque;

use super::{CyclePath, RegenModel};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::random::RngStream;

/// Default cap on cycles generated for one realization.
pub const DEFAULT_CYCLE_BUDGET: u64 = 10_000_000;

struct Track {
    // (start epoch, path) of every retained cycle, oldest first.
    cycles: VecDeque<(f64, CyclePath)>,
    // Global index of `cycles[0]`.
    first_index: u64,
    end: CompensatedSum,
}

/// One realization of all `m` regenerative processes, extended lazily as
/// later times are requested.
///
/// In streaming mode cycles behind the latest query of a coordinate are
/// discarded, so queries for each coordinate must come in nondecreasing
/// time order.
pub struct Realization<'m> {
    model: &'m dyn RegenModel,
    rng: RngStream,
    tracks: Vec<Track>,
    generated: u64,
    budget: u64,
    retain: bool,
    scratch: Vec<CyclePath>,
}

/// Where a time falls on one coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    /// `N(t)`: number of completed cycles.
    pub count: u64,
    /// `S_{N(t)}`.
    pub start: f64,
    /// `t - S_{N(t)}`.
    pub age: f64,
}

impl<'m> Realization<'m> {
    /// A realization that keeps every generated cycle.
    pub fn new(model: &'m dyn RegenModel, rng: RngStream) -> Self {
        let tracks = (0..model.coordinates())
            .map(|_| Track { cycles: VecDeque::new(), first_index: 0, end: CompensatedSum::new() })
            .collect();
        Self {
            model,
            rng,
            tracks,
            generated: 0,
            budget: DEFAULT_CYCLE_BUDGET,
            retain: true,
            scratch: Vec::with_capacity(model.coordinates()),
        }
    }

    /// A realization that forgets cycles once every query has moved past them.
    pub fn streaming(model: &'m dyn RegenModel, rng: RngStream) -> Self {
        let mut r = Self::new(model, rng);
        r.retain = false;
        r
    }

    /// Starts over on a fresh stream, keeping allocated capacity.
    pub fn reset(&mut self, rng: RngStream) {
        self.rng = rng;
        for track in &mut self.tracks {
            track.cycles.clear();
            track.first_index = 0;
            track.end = CompensatedSum::new();
        }
        self.generated = 0;
    }

    pub fn with_budget(mut self, cycles: u64) -> Self {
        self.budget = cycles;
        self
    }

    pub fn cycles_generated(&self) -> u64 {
        self.generated
    }

    fn extend(&mut self) -> Result<()> {
        if self.generated >= self.budget {
            return Err(Error::Budget(format!("realization needed more than {} cycles", self.budget)));
        }
        self.model.generate_cycle(&mut self.rng, &mut self.scratch)?;
        debug_assert_eq!(self.scratch.len(), self.tracks.len());
        for (track, path) in self.tracks.iter_mut().zip(self.scratch.drain(..)) {
            let start = track.end.value();
            track.end.add(path.length());
            track.cycles.push_back((start, path));
        }
        self.generated += 1;
        Ok(())
    }

    fn position(&mut self, i: usize, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Precondition(format!("evaluation time must be finite and >= 0, got {t}")));
        }
        while self.tracks[i].end.value() <= t {
            self.extend()?;
        }
        let track = &mut self.tracks[i];
        let front = track.cycles.front().map(|c| c.0).unwrap_or(0.0);
        if t < front {
            return Err(Error::Precondition(format!(
                "time {t} precedes the retained window of coordinate {i} (starts at {front})"
            )));
        }
        let pos = track.cycles.partition_point(|c| c.0 <= t) - 1;
        if !self.retain && pos > 0 {
            track.cycles.drain(..pos);
            track.first_index += pos as u64;
            return Ok(0);
        }
        Ok(pos)
    }

    /// Locates `t` on coordinate `i`.
    pub fn locate(&mut self, i: usize, t: f64) -> Result<Location> {
        let pos = self.position(i, t)?;
        let track = &self.tracks[i];
        let start = track.cycles[pos].0;
        Ok(Location { count: track.first_index + pos as u64, start, age: t - start })
    }

    /// `X_i(t) = X^i_{N(t)+1}(t - S_{N(t)})`, written into `out`.
    pub fn evaluate_into(&mut self, i: usize, t: f64, out: &mut [f64]) -> Result<()> {
        let pos = self.position(i, t)?;
        let (start, path) = &self.tracks[i].cycles[pos];
        path.eval_into(t - start, out);
        Ok(())
    }

    pub fn evaluate_at(&mut self, i: usize, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.model.state_dim()];
        self.evaluate_into(i, t, &mut out)?;
        Ok(out)
    }

    /// Retained renewal epochs of coordinate `i`, including the end of the
    /// last generated cycle.
    pub fn epochs(&self, i: usize) -> Vec<f64> {
        let track = &self.tracks[i];
        let mut e: Vec<f64> = track.cycles.iter().map(|c| c.0).collect();
        e.push(track.end.value());
        e
    }
}
