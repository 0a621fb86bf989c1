use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{mean_and_variance, order_free_mean};
use crate::random::{spawn_stream, stream_index, Purpose};

/// Row-major `n x m` matrix; row `k` is replication `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    m: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(m: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || !data.len().is_multiple_of(m) {
            return Err(Error::Dimension(format!("{} values do not fill rows of width {m}", data.len())));
        }
        Ok(Self { m, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(m, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn columns(&self) -> usize {
        self.m
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.data.iter().skip(i).step_by(self.m).copied().collect()
    }

    pub fn row_products(&self) -> Vec<f64> {
        self.data.chunks(self.m).map(|r| r.iter().product()).collect()
    }
}

/// Product-form gap at one horizon and one test-function tuple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEstimate {
    /// `|mean(prod f_i) - prod mean(f_i)|`.
    pub gap: f64,
    /// Bootstrap standard error of the signed difference.
    pub se: f64,
    pub n: usize,
    pub marginal_means: Vec<f64>,
    pub marginal_ses: Vec<f64>,
    /// Fewer than two coordinates vary across replications; `gap` and `se`
    /// are then exactly 0.
    pub degenerate: bool,
}

impl GapEstimate {
    /// Pass threshold `max(floor, 3 se)`.
    pub fn threshold(&self, floor: f64) -> f64 {
        floor.max(3.0 * self.se)
    }

    pub fn passes(&self, floor: f64) -> bool {
        self.gap < self.threshold(floor)
    }
}

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 400;
pub const MIN_GAP_REPLICATIONS: usize = 1000;

fn constant(xs: &[f64]) -> Option<f64> {
    let first = *xs.first()?;
    xs.iter().all(|x| *x == first).then_some(first)
}

fn mean_exact(xs: &[f64]) -> f64 {
    constant(xs).unwrap_or_else(|| order_free_mean(xs))
}

/// Gap statistic with a bootstrap standard error. Resample `b` draws its
/// indices from stream `(seed, Bootstrap, unit * resamples + b)`.
pub fn product_form_gap(samples: &SampleMatrix, resamples: usize, seed: u64, unit: u64) -> Result<GapEstimate> {
    let n = samples.rows();
    if n < MIN_GAP_REPLICATIONS {
        return Err(Error::Precondition(format!(
            "gap statistic needs at least {MIN_GAP_REPLICATIONS} replications, got {n}"
        )));
    }
    if resamples < 2 {
        return Err(Error::Precondition("bootstrap needs at least 2 resamples".into()));
    }
    let columns: Vec<Vec<f64>> = (0..samples.columns()).map(|i| samples.column(i)).collect();
    let marginal_means: Vec<f64> = columns.iter().map(|c| mean_exact(c)).collect();
    let marginal_ses: Vec<f64> = columns.iter().map(|c| (mean_and_variance(c).1 / n as f64).sqrt()).collect();
    // Constant columns factor out of both terms of the difference.
    let mut scale = 1.0;
    let mut varying = Vec::new();
    for c in &columns {
        match constant(c) {
            Some(v) => scale *= v,
            None => varying.push(c.as_slice()),
        }
    }
    if varying.len() < 2 {
        return Ok(GapEstimate { gap: 0.0, se: 0.0, n, marginal_means, marginal_ses, degenerate: true });
    }
    let m = varying.len();
    let products: Vec<f64> = (0..n).map(|k| varying.iter().map(|c| c[k]).product()).collect();
    let d = scale * (order_free_mean(&products) - varying.iter().map(|c| order_free_mean(c)).product::<f64>());
    let boot: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = spawn_stream(seed, stream_index(Purpose::Bootstrap, unit * resamples as u64 + b));
            let mut sums = vec![0.0; m];
            let mut prod_sum = 0.0;
            for _ in 0..n {
                let k = rng.random_range(0..n);
                let mut p = 1.0;
                for (s, c) in sums.iter_mut().zip(&varying) {
                    *s += c[k];
                    p *= c[k];
                }
                prod_sum += p;
            }
            scale * (prod_sum / n as f64 - sums.iter().map(|s| s / n as f64).product::<f64>())
        })
        .collect();
    let se = mean_and_variance(&boot).1.sqrt();
    Ok(GapEstimate { gap: d.abs(), se, n, marginal_means, marginal_ses, degenerate: false })
}

pub const KS2_GRID: usize = 32;
pub const DEFAULT_PERMUTATIONS: usize = 200;
pub const MIN_KS2_REPLICATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ks2Result {
    /// `sup |F12 - F1 F2|` over the quantile grid.
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
}

/// Empirical quantiles at levels `k / (KS2_GRID + 1)`, then each value's
/// grid cell: the number of thresholds strictly below it.
fn grid_cells(xs: &[f64]) -> Vec<u8> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let thresholds: Vec<f64> = (1..=KS2_GRID).map(|k| sorted[((k * n).div_ceil(KS2_GRID + 1)).max(1) - 1]).collect();
    xs.iter().map(|x| thresholds.partition_point(|q| q < x) as u8).collect()
}

fn ks2_distance(cx: &[u8], cy: &[u8], perm: Option<&[u32]>) -> f64 {
    const G: usize = KS2_GRID + 1;
    let mut joint = [[0u32; G]; G];
    let mut mx = [0u32; G];
    let mut my = [0u32; G];
    for k in 0..cx.len() {
        let a = cx[k] as usize;
        let b = cy[perm.map_or(k, |p| p[k] as usize)] as usize;
        joint[a][b] += 1;
        mx[a] += 1;
        my[b] += 1;
    }
    let n = cx.len() as f64;
    // Cumulative counts: F(a, b) = #{cell_x <= a, cell_y <= b} / n.
    let mut col = [0u32; G];
    let mut fx = 0u32;
    let mut d: f64 = 0.0;
    for a in 0..KS2_GRID {
        fx += mx[a];
        let mut row_cum = 0u32;
        let mut fy = 0u32;
        for b in 0..KS2_GRID {
            row_cum += joint[a][b];
            col[b] += row_cum;
            fy += my[b];
            let f12 = col[b] as f64 / n;
            let prod = (fx as f64 / n) * (fy as f64 / n);
            d = d.max((f12 - prod).abs());
        }
    }
    d
}

/// Distance between the joint ECDF of `(x, y)` and the product of its
/// marginal ECDFs on a 32 x 32 quantile grid, with a permutation p-value.
pub fn independence_ks2(samples: &SampleMatrix, permutations: usize, seed: u64) -> Result<Ks2Result> {
    if samples.columns() != 2 {
        return Err(Error::Dimension(format!(
            "independence_ks2 takes exactly 2 coordinates, got {}",
            samples.columns()
        )));
    }
    let n = samples.rows();
    if n < MIN_KS2_REPLICATIONS {
        return Err(Error::Precondition(format!(
            "independence_ks2 needs at least {MIN_KS2_REPLICATIONS} replications, got {n}"
        )));
    }
    if permutations == 0 {
        return Err(Error::Precondition("need at least one permutation".into()));
    }
    let cx = grid_cells(&samples.column(0));
    let cy = grid_cells(&samples.column(1));
    let statistic = ks2_distance(&cx, &cy, None);
    let exceed = (0..permutations as u64)
        .into_par_iter()
        .filter(|&p| {
            let mut rng = spawn_stream(seed, stream_index(Purpose::Permutation, p));
            let mut perm: Vec<u32> = (0..n as u32).collect();
            perm.shuffle(&mut rng);
            ks2_distance(&cx, &cy, Some(&perm)) >= statistic
        })
        .count();
    Ok(Ks2Result { statistic, p_value: (1 + exceed) as f64 / (1 + permutations) as f64, permutations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RngStream;
    use rand::Rng;

    fn matrix(n: usize, seed: u64, f: impl Fn(&mut RngStream) -> Vec<f64>) -> SampleMatrix {
        let mut rng = spawn_stream(seed, 0);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| f(&mut rng)).collect();
        SampleMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn coupled_indicators_have_quarter_gap() {
        let s = matrix(10_000, 1, |r| {
            let x = (r.random::<f64>() <= 0.5) as u8 as f64;
            vec![x, x]
        });
        let g = product_form_gap(&s, 100, 1, 0).unwrap();
        // Direct oracle on the same sample.
        let p = s.column(0).iter().sum::<f64>() / 10_000.0;
        assert!((g.gap - (p - p * p)).abs() < 1e-12);
        assert!((g.gap - 0.25).abs() < 0.01);
    }

    #[test]
    fn independent_indicators_have_small_gap() {
        let s = matrix(20_000, 2, |r| {
            vec![(r.random::<f64>() <= 0.5) as u8 as f64, (r.random::<f64>() <= 0.3) as u8 as f64]
        });
        let g = product_form_gap(&s, 200, 2, 0).unwrap();
        assert!(g.gap < 4.0 * g.se, "{g:?}");
        // Oracle SE of the difference for independent Bernoullis, to first order.
        let oracle = (0.5f64 * 0.5 * 0.3 * 0.7 / 20_000.0).sqrt();
        assert!((g.se / oracle - 1.0).abs() < 0.25, "se {} vs {oracle}", g.se);
    }

    #[test]
    fn constants_give_exact_zero() {
        let s = matrix(2000, 3, |r| vec![0.1, r.random()]);
        let g = product_form_gap(&s, 50, 3, 0).unwrap();
        assert_eq!(g.gap, 0.0);
        assert_eq!(g.se, 0.0);
        assert!(g.degenerate);
        let ones = SampleMatrix::new(2, vec![1.0; 4000]).unwrap();
        assert_eq!(product_form_gap(&ones, 50, 3, 0).unwrap().gap, 0.0);
    }

    #[test]
    fn gap_ignores_row_order() {
        let s = matrix(5000, 4, |r| {
            let x: f64 = r.random();
            vec![(x < 0.4) as u8 as f64, (x + r.random::<f64>() < 0.9) as u8 as f64]
        });
        let mut rows: Vec<Vec<f64>> = (0..s.rows()).map(|k| s.row(k).to_vec()).collect();
        rows.reverse();
        rows.swap(0, 1234);
        let t = SampleMatrix::from_rows(&rows).unwrap();
        assert_eq!(product_form_gap(&s, 10, 4, 0).unwrap().gap, product_form_gap(&t, 10, 4, 0).unwrap().gap);
    }

    #[test]
    fn small_samples_rejected() {
        let s = SampleMatrix::new(2, vec![0.0; 1998]).unwrap();
        assert!(matches!(product_form_gap(&s, 400, 0, 0), Err(Error::Precondition(_))));
        let one = SampleMatrix::new(2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(independence_ks2(&one, 10, 0), Err(Error::Precondition(_))));
        let three = SampleMatrix::new(3, vec![0.0; 30_000 * 3]).unwrap();
        assert!(matches!(independence_ks2(&three, 10, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn ks2_distance_matches_direct_ecdf() {
        let s = matrix(10_000, 5, |r| {
            let x: f64 = r.random();
            vec![x, 0.5 * x + 0.5 * r.random::<f64>()]
        });
        let got = independence_ks2(&s, 20, 5).unwrap();
        // Direct oracle: evaluate ECDFs at the same quantile grid.
        let (x, y) = (s.column(0), s.column(1));
        let q = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            (1..=32).map(|k| v[(k * v.len()).div_ceil(33) - 1]).collect::<Vec<_>>()
        };
        let (qx, qy) = (q(&x), q(&y));
        let n = x.len() as f64;
        let mut d: f64 = 0.0;
        for a in &qx {
            for b in &qy {
                let f1 = x.iter().filter(|v| *v <= a).count() as f64 / n;
                let f2 = y.iter().filter(|v| *v <= b).count() as f64 / n;
                let f12 = x.iter().zip(&y).filter(|(u, v)| *u <= a && *v <= b).count() as f64 / n;
                d = d.max((f12 - f1 * f2).abs());
            }
        }
        assert!((got.statistic - d).abs() < 1e-12, "{} vs {d}", got.statistic);
        assert!(got.p_value < 0.06);
    }

    #[test]
    fn ks2_detects_comonotone_and_calibrates() {
        let dependent = matrix(10_000, 6, |r| {
            let x: f64 = r.random();
            vec![x, x]
        });
        assert!(independence_ks2(&dependent, 200, 6).unwrap().p_value < 0.01);
        let mut rejections = 0;
        for rep in 0..40u64 {
            let s = matrix(10_000, 100 + rep, |r| vec![r.random(), r.random()]);
            if independence_ks2(&s, 100, rep).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        assert!(rejections <= 6, "{rejections} of 40");
    }
}
