use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::MAX_EVENTS_PER_CYCLE;
use crate::engine::{CyclePath, PathBuilder, RegenModel};
use crate::error::{Error, Result};
use crate::random::RngStream;

/// Observation of the whole network at time `alpha * t + beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacksonObservation {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

/// Open Jackson network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacksonSpec {
    /// External Poisson arrival rate per station.
    pub arrival_rates: Vec<f64>,
    /// Exponential service rate per station.
    pub service_rates: Vec<f64>,
    /// `routing[j][k]`: probability that a job leaving `j` joins `k`; the
    /// row deficit leaves the network.
    pub routing: Vec<Vec<f64>>,
    /// One model coordinate per observation; each carries the full vector of
    /// station counts.
    #[serde(default = "default_observations")]
    pub observations: Vec<JacksonObservation>,
}

fn default_observations() -> Vec<JacksonObservation> {
    vec![JacksonObservation { alpha: 1.0, beta: 0.0 }]
}

/// Solves the traffic equations `r = a + P^T r`.
///
/// Requires the routing matrix to have spectral radius below one, checked as
/// `(I - P^T)` being a nonsingular M-matrix (nonnegative inverse).
pub fn traffic_solve(spec: &JacksonSpec) -> Result<Vec<f64>> {
    let n = spec.arrival_rates.len();
    if spec.routing.len() != n || spec.routing.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(format!("routing must be {n}x{n}")));
    }
    // Gauss-Jordan inverse of A = I - P^T.
    let mut a = vec![0.0; n * n];
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j { 1.0 } else { 0.0 } - spec.routing[j][i];
        }
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs())).unwrap();
        if a[pivot * n + col].abs() < 1e-12 {
            return Err(Error::config("routing", "traffic equations are singular"));
        }
        for k in 0..n {
            a.swap(col * n + k, pivot * n + k);
            inv.swap(col * n + k, pivot * n + k);
        }
        let p = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[row * n + k] -= f * a[col * n + k];
                        inv[row * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    if inv.iter().any(|x| *x < -1e-9) {
        return Err(Error::config("routing", "spectral radius of the routing matrix must be < 1"));
    }
    Ok((0..n).map(|i| (0..n).map(|k| inv[i * n + k] * spec.arrival_rates[k]).sum()).collect())
}

#[derive(Clone, Debug)]
pub struct JacksonNetwork {
    spec: JacksonSpec,
    effective: Vec<f64>,
    total_arrival: f64,
    cycle_mean: f64,
}

pub fn build_jackson(spec: &JacksonSpec) -> Result<JacksonNetwork> {
    let n = spec.arrival_rates.len();
    if n == 0 {
        return Err(Error::config("arrival_rates", "need at least one station"));
    }
    if spec.service_rates.len() != n {
        return Err(Error::Dimension(format!("service_rates must have {n} entries")));
    }
    for (j, a) in spec.arrival_rates.iter().enumerate() {
        if !(a.is_finite() && *a >= 0.0) {
            return Err(Error::config(format!("arrival_rates[{j}]"), "must be finite and >= 0"));
        }
    }
    for (j, m) in spec.service_rates.iter().enumerate() {
        if !(m.is_finite() && *m > 0.0) {
            return Err(Error::config(format!("service_rates[{j}]"), "must be finite and > 0"));
        }
    }
    for (j, row) in spec.routing.iter().enumerate() {
        for (k, p) in row.iter().enumerate() {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::config(format!("routing[{j}][{k}]"), "must be a probability"));
            }
        }
        if row.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::config(format!("routing[{j}]"), "row sum must be <= 1"));
        }
    }
    let total_arrival: f64 = spec.arrival_rates.iter().sum();
    if !(total_arrival > 0.0) {
        return Err(Error::config(
            "arrival_rates",
            "total external arrival rate must be > 0 (an always-empty network has no cycles)",
        ));
    }
    if spec.observations.is_empty() {
        return Err(Error::config("observations", "need at least one observation"));
    }
    for (i, o) in spec.observations.iter().enumerate() {
        if !(o.alpha.is_finite() && o.alpha > 0.0) {
            return Err(Error::config(format!("observations[{i}].alpha"), "must be finite and > 0"));
        }
        if !o.beta.is_finite() {
            return Err(Error::config(format!("observations[{i}].beta"), "must be finite"));
        }
    }
    let effective = traffic_solve(spec)?;
    for (j, (r, m)) in effective.iter().zip(&spec.service_rates).enumerate() {
        if r >= m {
            return Err(Error::config(
                format!("service_rates[{j}]"),
                format!("stability: effective arrival rate {r} must be below service rate {m}"),
            ));
        }
    }
    let empty: f64 = effective.iter().zip(&spec.service_rates).map(|(r, m)| 1.0 - r / m).product();
    Ok(JacksonNetwork { spec: spec.clone(), effective, total_arrival, cycle_mean: 1.0 / (total_arrival * empty) })
}

impl JacksonNetwork {
    pub fn stations(&self) -> usize {
        self.spec.arrival_rates.len()
    }

    pub fn effective_rates(&self) -> &[f64] {
        &self.effective
    }

    pub fn observations(&self) -> &[JacksonObservation] {
        &self.spec.observations
    }

    /// Utilization `r_j / mu_j`.
    pub fn utilization(&self, station: usize) -> f64 {
        self.effective[station] / self.spec.service_rates[station]
    }

    /// Product-form marginal `(1 - rho) rho^n`.
    pub fn stationary_pmf(&self, station: usize, n: u64) -> f64 {
        let rho = self.utilization(station);
        (1.0 - rho) * rho.powi(n as i32)
    }

    /// One busy-plus-idle cycle, from empty to the next return to empty.
    pub fn network_cycle(&self, rng: &mut RngStream) -> Result<CyclePath> {
        let n = self.stations();
        let rates = &self.spec.service_rates;
        let mut counts: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, n);
        let zeros: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, n);
        let mut builder = PathBuilder::new(n);
        builder.segment(0.0, &counts, &zeros);
        let mut t = 0.0;
        let mut busy = 0usize;
        let mut service_total = 0.0;
        let mut events = 0u64;
        loop {
            events += 1;
            if events > MAX_EVENTS_PER_CYCLE {
                return Err(Error::Budget(format!(
                    "network did not return to empty within {MAX_EVENTS_PER_CYCLE} events"
                )));
            }
            let total = self.total_arrival + service_total;
            let wait: f64 = Exp1.sample(rng);
            t += wait / total;
            let mut pick = rng.random::<f64>() * total;
            let mut arrival = None;
            for (j, a) in self.spec.arrival_rates.iter().enumerate() {
                if pick < *a {
                    arrival = Some(j);
                    break;
                }
                pick -= a;
            }
            let target = match arrival {
                Some(j) => Some(j),
                None => {
                    // A service completion at some busy station.
                    let mut served = None;
                    for j in 0..n {
                        if counts[j] > 0.0 {
                            if pick < rates[j] {
                                served = Some(j);
                                break;
                            }
                            pick -= rates[j];
                        }
                    }
                    // Rounding can leave `pick` just past the last busy station.
                    let j = served.unwrap_or_else(|| (0..n).rev().find(|&j| counts[j] > 0.0).unwrap());
                    counts[j] -= 1.0;
                    if counts[j] == 0.0 {
                        busy -= 1;
                        service_total -= rates[j];
                    }
                    let mut u = rng.random::<f64>();
                    let mut next = None;
                    for (k, p) in self.spec.routing[j].iter().enumerate() {
                        if u < *p {
                            next = Some(k);
                            break;
                        }
                        u -= p;
                    }
                    next
                }
            };
            if let Some(k) = target {
                if counts[k] == 0.0 {
                    busy += 1;
                    service_total += rates[k];
                }
                counts[k] += 1.0;
            }
            if busy == 0 {
                return builder.finish(t);
            }
            if busy == 1 {
                // Re-sum to keep the running total free of drift.
                service_total = (0..n).filter(|&j| counts[j] > 0.0).map(|j| rates[j]).sum();
            }
            builder.segment(t, &counts, &zeros);
        }
    }
}

impl RegenModel for JacksonNetwork {
    fn name(&self) -> &'static str {
        "jackson"
    }

    fn coordinates(&self) -> usize {
        self.spec.observations.len()
    }

    fn state_dim(&self) -> usize {
        self.stations()
    }

    fn cycle_means(&self) -> Vec<f64> {
        vec![self.cycle_mean; self.spec.observations.len()]
    }

    fn generate_cycle(&self, rng: &mut RngStream, out: &mut Vec<CyclePath>) -> Result<()> {
        out.clear();
        let path = self.network_cycle(rng)?;
        out.extend(std::iter::repeat_n(path, self.spec.observations.len()));
        Ok(())
    }
}
