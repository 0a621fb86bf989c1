//! Renewal mechanics for a single coordinate: epochs, counting process,
//! age/residual/spread, and the equilibrium (stationary age) law.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::numerics::{integrate_with_breaks, ks_statistic, CompensatedSum};
use crate::random::{MarginalSpec, RngStream};

/// Materialized renewal epochs `0 = S_0 < S_1 < ...` covering `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RenewalPath {
    epochs: Vec<f64>,
    horizon: f64,
}

/// Age, residual lifetime and spread at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgeResidual {
    pub age: f64,
    pub residual: f64,
}

impl AgeResidual {
    /// Length of the straddling cycle.
    pub fn spread(&self) -> f64 {
        self.age + self.residual
    }
}

impl RenewalPath {
    pub fn new(epochs: Vec<f64>, horizon: f64) -> Result<Self> {
        if epochs.first() != Some(&0.0) {
            return Err(Error::config("epochs", "must start at 0"));
        }
        if let Some(k) = epochs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::config(format!("epochs[{}]", k + 1), "must be strictly increasing"));
        }
        let last = *epochs.last().unwrap();
        if !(horizon >= 0.0 && last >= horizon) {
            return Err(Error::config("horizon", format!("must lie in [0, {last}]")));
        }
        Ok(Self { epochs, horizon })
    }

    /// Epochs from successive cycle lengths, summed with compensation.
    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        let mut epochs = Vec::with_capacity(lengths.len() + 1);
        epochs.push(0.0);
        let mut s = CompensatedSum::new();
        for (k, &len) in lengths.iter().enumerate() {
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::config(format!("lengths[{k}]"), "must be finite and > 0"));
            }
            s.add(len);
            epochs.push(s.value());
        }
        let horizon = *epochs.last().unwrap();
        Self::new(epochs, horizon)
    }

    /// Draws i.i.d. cycle lengths from `spec` until the path strictly covers
    /// `horizon`.
    pub fn simulate(spec: &MarginalSpec, rng: &mut RngStream, horizon: f64) -> Result<Self> {
        spec.validate()?;
        let mut epochs = vec![0.0];
        let mut s = CompensatedSum::new();
        while *epochs.last().unwrap() <= horizon {
            s.add(spec.sample(rng));
            epochs.push(s.value());
        }
        Self::new(epochs, horizon)
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `N(t) = sup { n : S_n <= t }`.
    pub fn count_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Precondition(format!(
                "time {t} outside the materialized horizon [0, {}]",
                self.horizon
            )));
        }
        Ok(self.epochs.partition_point(|&s| s <= t) - 1)
    }

    /// `(t - S_{N(t)}, S_{N(t)+1} - t)`; the age is 0 at a renewal epoch.
    pub fn age_residual_at(&self, t: f64) -> Result<AgeResidual> {
        let n = self.count_at(t)?;
        let next = self
            .epochs
            .get(n + 1)
            .ok_or_else(|| Error::Precondition(format!("renewal after time {t} is not materialized")))?;
        Ok(AgeResidual { age: t - self.epochs[n], residual: next - t })
    }
}

/// `F_e(x) = (1/mu) * integral_0^x P(T > u) du`, the stationary law of age
/// and residual lifetime.
pub fn equilibrium_cdf(spec: &MarginalSpec, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mu = spec.mean();
    match *spec {
        MarginalSpec::Exponential { rate } => -(-rate * x).exp_m1(),
        MarginalSpec::Deterministic { value } => (x / value).min(1.0),
        MarginalSpec::Gamma { shape, rate } => {
            // integral_0^x S(u) du = x S(x) + E[T; T <= x]
            //                      = x Q(k, rx) + (k/r) P(k + 1, rx)
            let z = rate * x;
            let tail = crate::random::gamma_q(shape, z);
            let body = crate::random::gamma_p(shape + 1.0, z);
            ((x * tail + mu * body) / mu).min(1.0)
        }
        MarginalSpec::Lattice { span, ref weights } => {
            let mut integral = 0.0;
            let mut tail: f64 = weights.iter().sum();
            for (k, w) in weights.iter().enumerate() {
                let lo = span * k as f64;
                if x <= lo {
                    break;
                }
                integral += tail * (x.min(lo + span) - lo);
                tail -= w;
            }
            (integral / mu).min(1.0)
        }
        MarginalSpec::ShiftedUniform { .. } => equilibrium_cdf_quadrature(spec, x).min(1.0),
    }
}

/// Quadrature route for `F_e`, accurate to 1e-10 absolute.
pub fn equilibrium_cdf_quadrature(spec: &MarginalSpec, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let upper = spec.support_max().map_or(x, |m| x.min(m));
    let mu = spec.mean();
    integrate_with_breaks(|u| spec.survival(u), 0.0, upper, &spec.breakpoints(), 1e-10 * mu)
        .map(|v| v / mu)
        .unwrap_or(f64::NAN)
}

/// `1 - F_e(x)`.
pub fn equilibrium_survival(spec: &MarginalSpec, x: f64) -> f64 {
    match *spec {
        MarginalSpec::Exponential { rate } => (-rate * x.max(0.0)).exp(),
        _ => 1.0 - equilibrium_cdf(spec, x),
    }
}

/// Draw from the size-biased law `x P(T in dx) / E[T]`, the stationary
/// spread.
pub fn spread_sampler(spec: &MarginalSpec, rng: &mut RngStream) -> Result<f64> {
    spec.validate()?;
    if !spec.second_moment().is_finite() {
        return Err(Error::config("", "spread requires a finite second moment"));
    }
    Ok(match *spec {
        MarginalSpec::Exponential { rate } => Gamma::new(2.0, 1.0 / rate).unwrap().sample(rng),
        MarginalSpec::Gamma { shape, rate } => Gamma::new(shape + 1.0, 1.0 / rate).unwrap().sample(rng),
        MarginalSpec::Deterministic { value } => value,
        MarginalSpec::Lattice { span, ref weights } => {
            let total: f64 = weights.iter().enumerate().map(|(k, w)| (k + 1) as f64 * w).sum();
            let u = rng.open01() * total;
            let mut acc = 0.0;
            let mut pick = weights.len();
            for (k, w) in weights.iter().enumerate() {
                acc += (k + 1) as f64 * w;
                if acc >= u && *w > 0.0 {
                    pick = k + 1;
                    break;
                }
            }
            span * pick as f64
        }
        MarginalSpec::ShiftedUniform { lo, hi } => {
            let u: f64 = rng.random();
            (lo * lo + u * (hi * hi - lo * lo)).sqrt()
        }
    })
}

/// Samples `(U alpha, (1 - U) alpha)` with `alpha` the stationary spread and
/// returns the KS distances of both coordinates against `F_e`.
pub fn uniform_split_check(spec: &MarginalSpec, rng: &mut RngStream, n: usize) -> Result<(f64, f64)> {
    if n < 1000 {
        return Err(Error::Precondition(format!("uniform split check needs n >= 1000, got {n}")));
    }
    let mut ages = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for _ in 0..n {
        let spread = spread_sampler(spec, rng)?;
        let u: f64 = rng.random();
        ages.push(u * spread);
        residuals.push((1.0 - u) * spread);
    }
    let cdf = |x| equilibrium_cdf(spec, x);
    Ok((ks_statistic(&ages, cdf), ks_statistic(&residuals, cdf)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::mean_and_variance;
    use crate::random::spawn_stream;
    use approx::assert_abs_diff_eq;

    /// Composite Simpson rule on a fine grid; independent of the library
    /// quadrature.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn oracle_fe(spec: &MarginalSpec, x: f64) -> f64 {
        // Split at kinks so Simpson sees smooth pieces.
        let mut pts = vec![0.0];
        pts.extend(spec.breakpoints().into_iter().filter(|p| *p < x));
        pts.push(x);
        let tail = |u: f64| 1.0 - spec.cdf(u);
        // u = b w^4 on the first piece smooths cusps at the origin.
        // Pieces end one ulp short so jumps are seen from the left.
        let b = pts[1].next_down();
        let head = simpson(|w: f64| tail(b * w.powi(4)) * 4.0 * b * w.powi(3), 0.0, 1.0, 20_000);
        let rest: f64 = pts[1..].windows(2).map(|w| simpson(tail, w[0], w[1].next_down(), 20_000)).sum();
        (head + rest) / spec.mean()
    }

    fn path(epochs: &[f64]) -> RenewalPath {
        RenewalPath::new(epochs.to_vec(), *epochs.last().unwrap()).unwrap()
    }

    #[test]
    fn counting_process_boundaries() {
        let p = path(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(p.count_at(0.0).unwrap(), 0);
        assert_eq!(p.count_at(2.0).unwrap(), 2);
        assert_eq!(p.count_at(1.5).unwrap(), 1);
        assert!(p.count_at(3.5).is_err());
    }

    #[test]
    fn age_residual_values() {
        let p = path(&[0.0, 1.0, 2.0]);
        assert_eq!(p.age_residual_at(1.0).unwrap(), AgeResidual { age: 0.0, residual: 1.0 });
        assert_eq!(p.age_residual_at(1.25).unwrap(), AgeResidual { age: 0.25, residual: 0.75 });
        assert!(p.age_residual_at(2.0).is_err());
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(RenewalPath::new(vec![0.0, 1.0, 1.0], 1.0).is_err());
        assert!(RenewalPath::new(vec![0.5, 1.0], 1.0).is_err());
        assert!(RenewalPath::new(vec![0.0, 1.0], 2.0).is_err());
        assert!(RenewalPath::from_lengths(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn compensated_epochs_do_not_drift() {
        let lengths = vec![0.1; 1_000_000];
        let p = RenewalPath::from_lengths(&lengths).unwrap();
        assert_abs_diff_eq!(*p.epochs().last().unwrap(), 100_000.0, epsilon = 1e-9);
    }

    #[test]
    fn stationary_age_of_exponential_cycles() {
        let spec = MarginalSpec::exponential(1.0);
        let ages: Vec<f64> = (0..100_000u64)
            .map(|k| {
                let mut rng = spawn_stream(5, k);
                let p = RenewalPath::simulate(&spec, &mut rng, 1000.0).unwrap();
                p.age_residual_at(1000.0).unwrap().age
            })
            .collect();
        let d = ks_statistic(&ages, |x| oracle_fe(&spec, x));
        assert!(d < 0.01, "KS {d}");
    }

    #[test]
    fn equilibrium_cdf_against_simpson() {
        let specs = [
            MarginalSpec::exponential(1.3),
            MarginalSpec::gamma(2.0, 1.0),
            MarginalSpec::gamma(0.7, 2.0),
            MarginalSpec::deterministic(1.5),
            MarginalSpec::lattice(0.5, vec![0.25, 0.0, 0.75]),
            MarginalSpec::shifted_uniform(0.5, 2.0),
        ];
        for spec in &specs {
            for x in [0.1, 0.5, 1.0, 1.7, 3.0, 8.0] {
                let got = equilibrium_cdf(spec, x);
                let want = oracle_fe(spec, x);
                assert!((got - want).abs() < 1e-8, "{spec:?} at {x}: {got} vs {want}");
            }
            assert_eq!(equilibrium_cdf(spec, 0.0), 0.0);
        }
    }

    #[test]
    fn equilibrium_closed_forms() {
        for x in [0.0, 0.3, 2.0] {
            assert_abs_diff_eq!(
                equilibrium_cdf(&MarginalSpec::exponential(2.0), x),
                1.0 - (-2.0 * x).exp(),
                epsilon = 1e-15
            );
        }
        let d = MarginalSpec::deterministic(2.0);
        assert_abs_diff_eq!(equilibrium_cdf(&d, 0.5), 0.25);
        assert_abs_diff_eq!(equilibrium_cdf(&d, 2.0), 1.0);
        assert_abs_diff_eq!(equilibrium_survival(&MarginalSpec::deterministic(1.0), 0.25), 0.75);
    }

    #[test]
    fn equilibrium_survival_is_convex() {
        let specs = [
            MarginalSpec::gamma(2.0, 1.0),
            MarginalSpec::shifted_uniform(0.5, 2.0),
            MarginalSpec::lattice(1.0, vec![0.5, 0.5]),
        ];
        for spec in &specs {
            let mut prev = -1.0;
            for k in 0..200 {
                let x = k as f64 * 0.05;
                let f = equilibrium_cdf(spec, x);
                assert!(f >= prev - 1e-12);
                prev = f;
                let (a, b) = (x, x + 0.1);
                let mid = equilibrium_survival(spec, 0.5 * (a + b));
                let chord = 0.5 * (equilibrium_survival(spec, a) + equilibrium_survival(spec, b));
                assert!(mid <= chord + 1e-10, "{spec:?} not convex at {x}");
            }
            assert!(equilibrium_cdf(spec, 1e3) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn spread_of_exponential_is_gamma_two() {
        // E[spread] = E[T^2]/E[T]; Simpson of x * x e^{-x} gives 2.
        let oracle = simpson(|x| x * x * (-x).exp(), 0.0, 60.0, 60_000);
        let mut rng = spawn_stream(8, 0);
        let xs: Vec<f64> =
            (0..100_000).map(|_| spread_sampler(&MarginalSpec::exponential(1.0), &mut rng).unwrap()).collect();
        let (m, _) = mean_and_variance(&xs);
        assert!((m - oracle).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn spread_of_gamma_and_point_mass() {
        let mut rng = spawn_stream(8, 1);
        let xs: Vec<f64> =
            (0..100_000).map(|_| spread_sampler(&MarginalSpec::gamma(2.0, 1.0), &mut rng).unwrap()).collect();
        let (m, _) = mean_and_variance(&xs);
        assert!((m - 3.0).abs() < 0.02, "mean {m}");
        assert_eq!(spread_sampler(&MarginalSpec::deterministic(1.5), &mut rng).unwrap(), 1.5);
    }

    #[test]
    fn spread_of_lattice_and_uniform() {
        let mut rng = spawn_stream(8, 2);
        for spec in [MarginalSpec::lattice(1.0, vec![0.5, 0.5]), MarginalSpec::shifted_uniform(1.0, 3.0)] {
            let xs: Vec<f64> = (0..100_000).map(|_| spread_sampler(&spec, &mut rng).unwrap()).collect();
            let (m, _) = mean_and_variance(&xs);
            let want = spec.second_moment() / spec.mean();
            assert!((m - want).abs() < 0.02, "{spec:?}: {m} vs {want}");
        }
    }

    #[test]
    fn uniform_split_marginals() {
        let mut rng = spawn_stream(3, 0);
        let (a, r) = uniform_split_check(&MarginalSpec::exponential(1.0), &mut rng, 100_000).unwrap();
        assert!(a < 0.01 && r < 0.01, "{a} {r}");
        let (a, r) = uniform_split_check(&MarginalSpec::deterministic(1.0), &mut rng, 100_000).unwrap();
        assert!(a < 0.01 && r < 0.01, "{a} {r}");
        assert!(uniform_split_check(&MarginalSpec::exponential(1.0), &mut rng, 0).is_err());
    }

    #[test]
    fn joint_tail_of_age_and_residual() {
        // P(age > x, residual > y) = P(residual > x + y) = 1 - F_e(x + y).
        let spec = MarginalSpec::gamma(2.0, 1.0);
        let pairs: Vec<AgeResidual> = (0..100_000u64)
            .map(|k| {
                let mut rng = spawn_stream(6, k);
                RenewalPath::simulate(&spec, &mut rng, 1000.0).unwrap().age_residual_at(1000.0).unwrap()
            })
            .collect();
        let n = pairs.len() as f64;
        let mut worst: f64 = 0.0;
        for x in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0] {
            for y in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0] {
                let emp = pairs.iter().filter(|p| p.age > x && p.residual > y).count() as f64 / n;
                worst = worst.max((emp - equilibrium_survival(&spec, x + y)).abs());
            }
        }
        assert!(worst < 0.02, "joint tail distance {worst}");
    }
}
