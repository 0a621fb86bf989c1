use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// One cycle's trajectory on `[0, length)`: piecewise-linear segments in
/// every state component, with jumps between segments.
///
/// Segment `k` starts at `knots[k]` and runs to the next knot (or to
/// `length`); on it the state is `values[k] + slopes[k] * (s - knots[k])`.
/// A new segment starting at a jump time makes the path right-continuous.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclePath {
    length: f64,
    dim: usize,
    knots: SmallVec<[f64; 4]>,
    values: SmallVec<[f64; 8]>,
    slopes: SmallVec<[f64; 8]>,
}

/// Incremental constructor for [`CyclePath`].
#[derive(Clone, Debug)]
pub struct PathBuilder {
    dim: usize,
    knots: SmallVec<[f64; 4]>,
    values: SmallVec<[f64; 8]>,
    slopes: SmallVec<[f64; 8]>,
}

impl PathBuilder {
    pub fn new(dim: usize) -> Self {
        Self { dim, knots: SmallVec::new(), values: SmallVec::new(), slopes: SmallVec::new() }
    }

    /// Starts a new segment at in-cycle time `at`.
    pub fn segment(&mut self, at: f64, values: &[f64], slopes: &[f64]) -> &mut Self {
        debug_assert_eq!(values.len(), self.dim);
        debug_assert_eq!(slopes.len(), self.dim);
        self.knots.push(at);
        self.values.extend_from_slice(values);
        self.slopes.extend_from_slice(slopes);
        self
    }

    pub fn finish(self, length: f64) -> Result<CyclePath> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Numerical(format!("cycle length must be finite and > 0, got {length}")));
        }
        if self.knots.first() != Some(&0.0) {
            return Err(Error::Numerical("cycle path must start with a segment at 0".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1] > w[0])) || *self.knots.last().unwrap() >= length {
            return Err(Error::Numerical("segment starts must increase inside the cycle".into()));
        }
        if self.values.iter().chain(&self.slopes).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite state on a cycle path".into()));
        }
        Ok(CyclePath { length, dim: self.dim, knots: self.knots, values: self.values, slopes: self.slopes })
    }
}

impl CyclePath {
    /// A single linear segment over the whole cycle.
    pub fn linear(length: f64, start: &[f64], slope: &[f64]) -> Result<Self> {
        let mut b = PathBuilder::new(start.len());
        b.segment(0.0, start, slope);
        b.finish(length)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> usize {
        self.knots.len()
    }

    fn segment_at(&self, s: f64) -> usize {
        self.knots.partition_point(|&k| k <= s).saturating_sub(1)
    }

    fn segment_end(&self, k: usize) -> f64 {
        self.knots.get(k + 1).copied().unwrap_or(self.length)
    }

    /// State at in-cycle age `s`, clamped to the cycle.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        let s = s.clamp(0.0, self.length);
        let k = self.segment_at(s);
        let h = s - self.knots[k];
        let base = k * self.dim;
        for (j, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.values[base + j] + self.slopes[base + j] * h;
        }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(s, &mut out);
        out
    }

    /// State just before the end of the cycle.
    pub fn terminal_value(&self) -> Vec<f64> {
        self.eval(self.length)
    }

    /// Exact `integral_0^upto g(X(s)) ds`, `upto` clamped to the cycle.
    pub fn integral_upto(&self, g: &TestFn, upto: f64) -> f64 {
        let upto = upto.clamp(0.0, self.length);
        let mut total = 0.0;
        for k in 0..self.knots.len() {
            let start = self.knots[k];
            if start >= upto {
                break;
            }
            let h = self.segment_end(k).min(upto) - start;
            let base = k * self.dim;
            total += g.segment_integral(&self.values[base..base + self.dim], &self.slopes[base..base + self.dim], h);
        }
        total
    }

    /// Exact `integral_0^T g(X(s)) ds` over the whole cycle.
    pub fn integral(&self, g: &TestFn) -> f64 {
        self.integral_upto(g, self.length)
    }
}

fn default_rhs() -> usize {
    1
}

/// Test functions with exact integrals over linear segments.
///
/// `Indicator` is `1{x <= threshold}`, `Exponential` is `exp(-rate * x)`, and
/// `Exceeds` is the strict comparison `1{x[lhs] > x[rhs]}` (the "updated"
/// indicator of the status model with its defaults).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFn {
    One,
    Identity {
        #[serde(default)]
        component: usize,
    },
    Indicator {
        #[serde(default)]
        component: usize,
        threshold: f64,
    },
    Exponential {
        #[serde(default)]
        component: usize,
        rate: f64,
    },
    #[serde(alias = "updated")]
    Exceeds {
        #[serde(default)]
        lhs: usize,
        #[serde(default = "default_rhs")]
        rhs: usize,
    },
}

/// Lebesgue measure of `{u in [0, h] : a + b u <= 0}`.
fn measure_nonpositive(a: f64, b: f64, h: f64) -> f64 {
    if b == 0.0 {
        return if a <= 0.0 { h } else { 0.0 };
    }
    let root = (-a / b).clamp(0.0, h);
    if b > 0.0 {
        root
    } else {
        h - root
    }
}

impl TestFn {
    pub fn updated() -> Self {
        TestFn::Exceeds { lhs: 0, rhs: 1 }
    }

    /// Largest state component the function reads.
    pub fn max_component(&self) -> usize {
        match *self {
            TestFn::One => 0,
            TestFn::Identity { component }
            | TestFn::Indicator { component, .. }
            | TestFn::Exponential { component, .. } => component,
            TestFn::Exceeds { lhs, rhs } => lhs.max(rhs),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            TestFn::One => Some(1.0),
            TestFn::Exponential { rate, .. } if *rate == 0.0 => Some(1.0),
            _ => None,
        }
    }

    pub fn validate(&self, state_dim: usize) -> Result<()> {
        if self.max_component() >= state_dim {
            return Err(Error::config(
                "component",
                format!("state has {state_dim} component(s), got index {}", self.max_component()),
            ));
        }
        match *self {
            TestFn::Indicator { threshold, .. } if !threshold.is_finite() => {
                Err(Error::config("threshold", "must be finite"))
            }
            TestFn::Exponential { rate, .. } if !(rate.is_finite() && rate >= 0.0) => {
                Err(Error::config("rate", "must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, state: &[f64]) -> f64 {
        match *self {
            TestFn::One => 1.0,
            TestFn::Identity { component } => state[component],
            TestFn::Indicator { component, threshold } => (state[component] <= threshold) as u8 as f64,
            TestFn::Exponential { component, rate } => (-rate * state[component]).exp(),
            TestFn::Exceeds { lhs, rhs } => (state[lhs] > state[rhs]) as u8 as f64,
        }
    }

    /// `integral_0^h g(values + slopes * u) du`.
    pub fn segment_integral(&self, values: &[f64], slopes: &[f64], h: f64) -> f64 {
        match *self {
            TestFn::One => h,
            TestFn::Identity { component } => values[component] * h + 0.5 * slopes[component] * h * h,
            TestFn::Indicator { component, threshold } => {
                measure_nonpositive(values[component] - threshold, slopes[component], h)
            }
            TestFn::Exponential { component, rate } => {
                let (a, b) = (values[component], slopes[component]);
                let rb = rate * b;
                if rb == 0.0 {
                    h * (-rate * a).exp()
                } else {
                    (-rate * a).exp() * -(-rb * h).exp_m1() / rb
                }
            }
            TestFn::Exceeds { lhs, rhs } => {
                let a = values[lhs] - values[rhs];
                let b = slopes[lhs] - slopes[rhs];
                h - measure_nonpositive(a, b, h)
            }
        }
    }
}
