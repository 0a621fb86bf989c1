use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{MarginalSpec, RngStream};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_psd, normal_cdf};

/// Joint law of one vector `(T^1, ..., T^m)` given its marginals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceSpec {
    #[default]
    Independent,
    /// All coordinates are `F_i^{-1}(U)` for one shared uniform `U`.
    Comonotone,
    /// Coordinate `i` is `Z + R_i` with one shared shock `Z` and independent
    /// residuals `R_i` drawn from the per-coordinate marginals.
    CommonShock { shock: MarginalSpec },
    /// Gaussian copula with the given correlation matrix (rows).
    GaussianCopula { correlation: Vec<Vec<f64>> },
}

#[derive(Clone, Debug)]
enum Coupling {
    Independent,
    Comonotone,
    CommonShock(MarginalSpec),
    Gaussian { dim: usize, cholesky: Vec<f64> },
}

/// Validated generator of i.i.d. dependent vectors.
#[derive(Clone, Debug)]
pub struct CycleVectorSampler {
    marginals: Vec<MarginalSpec>,
    coupling: Coupling,
}

impl CycleVectorSampler {
    pub fn new(dependence: &DependenceSpec, marginals: Vec<MarginalSpec>) -> Result<Self> {
        for (i, spec) in marginals.iter().enumerate() {
            spec.validate().map_err(|e| e.under(&format!("[{i}]")))?;
        }
        let m = marginals.len();
        let coupling = match dependence {
            DependenceSpec::Independent => Coupling::Independent,
            DependenceSpec::Comonotone => Coupling::Comonotone,
            DependenceSpec::CommonShock { shock } => {
                shock.validate().map_err(|e| e.under("shock"))?;
                Coupling::CommonShock(shock.clone())
            }
            DependenceSpec::GaussianCopula { correlation } => {
                if correlation.len() != m || correlation.iter().any(|row| row.len() != m) {
                    return Err(Error::Dimension(format!("correlation matrix must be {m}x{m} to match the marginals")));
                }
                for (i, row) in correlation.iter().enumerate() {
                    for (j, &r) in row.iter().enumerate() {
                        if !r.is_finite() || r.abs() > 1.0 {
                            return Err(Error::config(
                                format!("correlation[{i}][{j}]"),
                                format!("must lie in [-1, 1], got {r}"),
                            ));
                        }
                        if (r - correlation[j][i]).abs() > 1e-12 {
                            return Err(Error::config(format!("correlation[{i}][{j}]"), "matrix must be symmetric"));
                        }
                    }
                    if row[i] != 1.0 {
                        return Err(Error::config(format!("correlation[{i}][{i}]"), "diagonal must be 1"));
                    }
                }
                let flat: Vec<f64> = correlation.iter().flatten().copied().collect();
                let cholesky = cholesky_psd(&flat, m)
                    .ok_or_else(|| Error::config("correlation", "matrix is not positive semidefinite"))?;
                Coupling::Gaussian { dim: m, cholesky }
            }
        };
        Ok(Self { marginals, coupling })
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MarginalSpec] {
        &self.marginals
    }

    /// Mean of coordinate `i` of the produced vectors.
    pub fn coordinate_mean(&self, i: usize) -> f64 {
        match &self.coupling {
            Coupling::CommonShock(shock) => shock.mean() + self.marginals[i].mean(),
            _ => self.marginals[i].mean(),
        }
    }

    /// `E[(T^i)^2]`.
    pub fn coordinate_second_moment(&self, i: usize) -> f64 {
        let r = &self.marginals[i];
        match &self.coupling {
            Coupling::CommonShock(z) => z.second_moment() + 2.0 * z.mean() * r.mean() + r.second_moment(),
            _ => r.second_moment(),
        }
    }

    /// Whether coordinate `i` has an arithmetic law.
    pub fn coordinate_arithmetic(&self, i: usize) -> bool {
        match &self.coupling {
            Coupling::CommonShock(shock) => shock.is_arithmetic() && self.marginals[i].is_arithmetic(),
            _ => self.marginals[i].is_arithmetic(),
        }
    }

    /// Exact law of coordinate `i` when it is one of the parametric kinds;
    /// `None` for common-shock sums.
    pub fn coordinate_law(&self, i: usize) -> Option<&MarginalSpec> {
        match self.coupling {
            Coupling::CommonShock(_) => None,
            _ => Some(&self.marginals[i]),
        }
    }

    /// Fills `out` with one draw.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.marginals.len());
        match &self.coupling {
            Coupling::Independent => {
                for (o, spec) in out.iter_mut().zip(&self.marginals) {
                    *o = spec.sample(rng);
                }
            }
            Coupling::Comonotone => {
                let u = rng.open01();
                for (o, spec) in out.iter_mut().zip(&self.marginals) {
                    *o = spec.quantile(u);
                }
            }
            Coupling::CommonShock(shock) => {
                let z = shock.sample(rng);
                for (o, spec) in out.iter_mut().zip(&self.marginals) {
                    *o = z + spec.sample(rng);
                }
            }
            Coupling::Gaussian { dim, cholesky } => {
                let eps: Vec<f64> = (0..*dim).map(|_| StandardNormal.sample(rng)).collect();
                for (i, (o, spec)) in out.iter_mut().zip(&self.marginals).enumerate() {
                    let z: f64 = (0..=i).map(|k| cholesky[i * dim + k] * eps[k]).sum();
                    let u = normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                    *o = spec.quantile(u);
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut out = vec![0.0; self.marginals.len()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// One draw of the dependent vector.
pub fn sample_cycle_vector(
    dependence: &DependenceSpec,
    marginals: &[MarginalSpec],
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    Ok(CycleVectorSampler::new(dependence, marginals.to_vec())?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{average_ranks, mean_and_variance, spearman};
    use crate::random::spawn_stream;

    fn batch(sampler: &CycleVectorSampler, n: usize, index: u64) -> Vec<Vec<f64>> {
        let mut rng = spawn_stream(99, index);
        (0..n).map(|_| sampler.sample(&mut rng)).collect()
    }

    fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
        rows.iter().map(|r| r[j]).collect()
    }

    #[test]
    fn independent_deterministic_pair() {
        let mut rng = spawn_stream(0, 0);
        let v = sample_cycle_vector(
            &DependenceSpec::Independent,
            &[MarginalSpec::deterministic(1.0), MarginalSpec::deterministic(1.0)],
            &mut rng,
        )
        .unwrap();
        assert_eq!(v, vec![1.0, 1.0]);
    }

    #[test]
    fn comonotone_ranks_coincide() {
        let sampler = CycleVectorSampler::new(
            &DependenceSpec::Comonotone,
            vec![MarginalSpec::exponential(1.0), MarginalSpec::exponential(1.0)],
        )
        .unwrap();
        let rows = batch(&sampler, 100_000, 1);
        let (a, b) = (column(&rows, 0), column(&rows, 1));
        assert!((spearman(&a, &b) - 1.0).abs() < 1e-9);
        assert_eq!(average_ranks(&a), average_ranks(&b));
    }

    #[test]
    fn comonotone_mixed_marginals_keep_their_laws() {
        let sampler = CycleVectorSampler::new(
            &DependenceSpec::Comonotone,
            vec![MarginalSpec::exponential(1.0), MarginalSpec::shifted_uniform(1.0, 2.0)],
        )
        .unwrap();
        let rows = batch(&sampler, 50_000, 2);
        let b = column(&rows, 1);
        let d = crate::numerics::ks_statistic(&b, |x| sampler.marginals()[1].cdf(x));
        assert!(d < 0.01);
        assert_eq!(average_ranks(&column(&rows, 0)), average_ranks(&b));
    }

    #[test]
    fn common_shock_correlation() {
        // Cov(Z + E1, Z + E2) = Var Z = 1, Var(Z + Ei) = 2.
        let sampler = CycleVectorSampler::new(
            &DependenceSpec::CommonShock { shock: MarginalSpec::exponential(1.0) },
            vec![MarginalSpec::exponential(1.0), MarginalSpec::exponential(1.0)],
        )
        .unwrap();
        let rows = batch(&sampler, 100_000, 3);
        let (a, b) = (column(&rows, 0), column(&rows, 1));
        let (ma, va) = mean_and_variance(&a);
        let (mb, vb) = mean_and_variance(&b);
        let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64;
        let rho = cov / (va * vb).sqrt();
        assert!((rho - 0.5).abs() < 0.01, "rho {rho}");
        assert_eq!(sampler.coordinate_mean(0), 2.0);
    }

    #[test]
    fn identity_gaussian_copula_is_independent() {
        let sampler = CycleVectorSampler::new(
            &DependenceSpec::GaussianCopula { correlation: vec![vec![1.0, 0.0], vec![0.0, 1.0]] },
            vec![MarginalSpec::exponential(1.0), MarginalSpec::gamma(2.0, 1.0)],
        )
        .unwrap();
        let rows = batch(&sampler, 100_000, 4);
        let n = rows.len() as f64;
        let ra = average_ranks(&column(&rows, 0));
        let rb = average_ranks(&column(&rows, 1));
        // Empirical copula against the product copula on a 40x40 grid.
        let grid = 40;
        let mut counts = vec![0u32; grid * grid];
        for (a, b) in ra.iter().zip(&rb) {
            let ia = (((a / n) * grid as f64).ceil() as usize).clamp(1, grid) - 1;
            let ib = (((b / n) * grid as f64).ceil() as usize).clamp(1, grid) - 1;
            counts[ia * grid + ib] += 1;
        }
        let mut worst: f64 = 0.0;
        let mut cum = vec![0u32; grid * grid];
        for i in 0..grid {
            for j in 0..grid {
                let mut c = counts[i * grid + j];
                if i > 0 {
                    c += cum[(i - 1) * grid + j];
                }
                if j > 0 {
                    c += cum[i * grid + j - 1];
                }
                if i > 0 && j > 0 {
                    c -= cum[(i - 1) * grid + j - 1];
                }
                cum[i * grid + j] = c;
                let u = (i + 1) as f64 / grid as f64;
                let v = (j + 1) as f64 / grid as f64;
                worst = worst.max((c as f64 / n - u * v).abs());
            }
        }
        assert!(worst < 0.02, "copula distance {worst}");
    }

    #[test]
    fn gaussian_copula_errors() {
        let margins = vec![MarginalSpec::exponential(1.0), MarginalSpec::exponential(1.0)];
        let bad = DependenceSpec::GaussianCopula { correlation: vec![vec![1.0, 1.5], vec![1.5, 1.0]] };
        assert!(matches!(CycleVectorSampler::new(&bad, margins.clone()), Err(Error::Config { .. })));
        let three = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        let err = CycleVectorSampler::new(
            &DependenceSpec::GaussianCopula { correlation: three },
            vec![MarginalSpec::exponential(1.0); 3],
        )
        .unwrap_err();
        assert!(err.to_string().contains("positive semidefinite"));
        let wrong = DependenceSpec::GaussianCopula { correlation: vec![vec![1.0]] };
        assert!(matches!(CycleVectorSampler::new(&wrong, margins), Err(Error::Dimension(_))));
    }

    #[test]
    fn perfectly_correlated_copula_is_comonotone() {
        let sampler = CycleVectorSampler::new(
            &DependenceSpec::GaussianCopula { correlation: vec![vec![1.0, 1.0], vec![1.0, 1.0]] },
            vec![MarginalSpec::exponential(1.0), MarginalSpec::exponential(2.0)],
        )
        .unwrap();
        for row in batch(&sampler, 1000, 5) {
            assert!((row[0] - 2.0 * row[1]).abs() < 1e-9 * row[0].max(1.0));
        }
    }
}
