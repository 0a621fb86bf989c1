use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation time `v_i(t)` of one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `a t + b`.
    Affine {
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// `a t^p`.
    Power { p: f64, a: f64 },
}

impl Schedule {
    pub fn affine(a: f64, b: f64) -> Self {
        Schedule::Affine { a, b }
    }

    pub fn power(p: f64, a: f64) -> Self {
        Schedule::Power { p, a }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Schedule::Affine { a, b } => a * t + b,
            Schedule::Power { p, a } => a * t.powf(p),
        }
    }

    /// `(exponent, coefficient)` of the leading term.
    fn growth(&self) -> (f64, f64) {
        match *self {
            Schedule::Affine { a, .. } => (1.0, a),
            Schedule::Power { p, a } => (p, a),
        }
    }

    /// Smallest `t0 >= 0` with `v(t) > 0` for all `t > t0`.
    fn positive_from(&self) -> f64 {
        match *self {
            Schedule::Affine { a, b } => (-b / a).max(0.0),
            Schedule::Power { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Schedule::Affine { a, b } => {
                if !finite_pos(a) {
                    return Err(Error::config("a", "must be finite and > 0"));
                }
                if !b.is_finite() {
                    return Err(Error::config("b", "must be finite"));
                }
            }
            Schedule::Power { p, a } => {
                if !finite_pos(p) {
                    return Err(Error::config("p", "must be finite and > 0"));
                }
                if !finite_pos(a) {
                    return Err(Error::config("a", "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }
}

/// `liminf v_i(t) / v_j(t)` as `t -> inf`.
pub fn liminf_ratio(vi: &Schedule, vj: &Schedule) -> f64 {
    let (pi, ai) = vi.growth();
    let (pj, aj) = vj.growth();
    match pi.total_cmp(&pj) {
        Ordering::Greater => f64::INFINITY,
        Ordering::Less => 0.0,
        Ordering::Equal => ai / aj,
    }
}

/// One schedule per model coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScheduleSpec(pub Vec<Schedule>);

impl ScheduleSpec {
    pub fn new(entries: Vec<Schedule>) -> Self {
        Self(entries)
    }

    /// `v_i(t) = t` for every coordinate.
    pub fn identity(m: usize) -> Self {
        Self(vec![Schedule::affine(1.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Schedule] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::config("", "need at least one coordinate"));
        }
        for (i, s) in self.0.iter().enumerate() {
            s.validate().map_err(|e| e.under(&format!("[{i}]")))?;
        }
        Ok(())
    }

    pub fn eval(&self, i: usize, t: f64) -> f64 {
        self.0[i].eval(t)
    }

    /// All `v_i(t)` are > 0 for `t > t0()`.
    pub fn t0(&self) -> f64 {
        self.0.iter().map(Schedule::positive_from).fold(0.0, f64::max)
    }
}

/// One consecutive pair in mean order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    /// Coordinate with the smaller (or equal) mean.
    pub lower: usize,
    pub upper: usize,
    pub liminf_ratio: f64,
    pub mean_ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Outcome of the time-scaling hypothesis check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub verdict: Verdict,
    /// Coordinates sorted by mean cycle length.
    pub order: Vec<usize>,
    pub pairs: Vec<PairCheck>,
    /// First failing pair `(lower, upper)`.
    pub witness: Option<(usize, usize)>,
}

impl HypothesisCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Checks `liminf v_i / v_{i+1} > mu_i / mu_{i+1}` for consecutive
/// coordinates in ascending mean order.
///
/// Equal means are ordered by decreasing schedule growth, so the outcome does
/// not depend on how coordinates are labelled. Equality of the two ratios is
/// a failure.
pub fn check_hypotheses(schedule: &ScheduleSpec, means: &[f64]) -> Result<HypothesisCheck> {
    schedule.validate().map_err(|e| e.under("schedule"))?;
    if schedule.len() != means.len() {
        return Err(Error::Dimension(format!(
            "schedule has {} entries for {} coordinates",
            schedule.len(),
            means.len()
        )));
    }
    if let Some(i) = means.iter().position(|mu| !(mu.is_finite() && *mu > 0.0)) {
        return Err(Error::config(format!("means[{i}]"), "must be finite and > 0"));
    }
    let s = schedule.entries();
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&x, &y| {
        let (px, ax) = s[x].growth();
        let (py, ay) = s[y].growth();
        means[x].total_cmp(&means[y]).then(py.total_cmp(&px)).then(ay.total_cmp(&ax)).then(x.cmp(&y))
    });
    let pairs: Vec<PairCheck> = order
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let liminf = liminf_ratio(&s[lo], &s[hi]);
            let mean_ratio = means[lo] / means[hi];
            PairCheck { lower: lo, upper: hi, liminf_ratio: liminf, mean_ratio, holds: liminf > mean_ratio }
        })
        .collect();
    let witness = pairs.iter().find(|p| !p.holds).map(|p| (p.lower, p.upper));
    Ok(HypothesisCheck {
        verdict: if witness.is_none() { Verdict::Pass } else { Verdict::Fail },
        order,
        pairs,
        witness,
    })
}
