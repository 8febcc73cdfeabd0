//! Goodness-of-fit statistics against gridded densities.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::grid::Grid;

/// Kolmogorov–Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic Kolmogorov tail probability `P(D_n ≥ d)`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    // Stephens' finite-n correction
    let x = d * (sn + 0.12 + 0.11 / sn);
    if x < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// 99% quantile of the KS statistic for sample size `n` (asymptotic).
pub fn ks_critical_99(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Marginal CDF along one axis of a density that is constant on grid cells
/// centred on the nodes.
#[derive(Debug, Clone)]
pub struct CellMarginal {
    lower_edge: f64,
    width: f64,
    cumulative: Vec<f64>,
}

impl CellMarginal {
    pub fn new(grid: &Grid, density: &[f64], axis: usize) -> Self {
        let n = grid.points(axis);
        let mut mass = vec![0.0; n];
        let stride = grid.strides()[axis];
        for (flat, r) in density.iter().enumerate() {
            mass[(flat / stride) % n] += r;
        }
        let total: f64 = mass.iter().sum();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for m in &mass {
            acc += m / total;
            cumulative.push(acc);
        }
        let width = grid.dx()[axis];
        Self { lower_edge: grid.axis(axis).lower - 0.5 * width, width, cumulative }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.lower_edge) / self.width;
        if s <= 0.0 {
            return 0.0;
        }
        let n = self.cumulative.len() - 1;
        if s >= n as f64 {
            return 1.0;
        }
        let j = s.floor() as usize;
        let f = s - j as f64;
        self.cumulative[j] + f * (self.cumulative[j + 1] - self.cumulative[j])
    }
}

/// Pearson χ² result on a fixed binning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub pvalue: f64,
}

/// Minimum expected count for a bin to stand on its own.
pub const MIN_EXPECTED: f64 = 20.0;

/// χ² of observed counts against expected probabilities. Bins with fewer
/// than [`MIN_EXPECTED`] expected counts are pooled into one bin, which is
/// merged into the smallest kept bin if it is itself too sparse.
pub fn chi_square(observed: &[u64], probabilities: &[f64]) -> Option<ChiSquare> {
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = n * p;
        if e >= MIN_EXPECTED {
            bins.push((o as f64, e));
        } else {
            pooled_o += o as f64;
            pooled_e += e;
        }
    }
    if pooled_e >= MIN_EXPECTED {
        bins.push((pooled_o, pooled_e));
    } else if let Some(smallest) = bins.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)) {
        smallest.0 += pooled_o;
        smallest.1 += pooled_e;
    }
    if bins.len() < 2 {
        return None;
    }
    let statistic = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let pvalue = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    Some(ChiSquare { statistic, dof, pvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};

    #[test]
    fn ks_of_uniform_grid_quantiles_is_small() {
        let n = 1000;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        let shifted: Vec<f64> = samples.iter().map(|x| x * 0.5).collect();
        assert!((ks_statistic(&shifted, |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 2e-3);
    }

    #[test]
    fn kolmogorov_tail_matches_tabulated_quantiles() {
        // P(√n·D > 1.6276) ≈ 0.01 and P(√n·D > 1.3581) ≈ 0.05 for large n
        let n = 1_000_000;
        let p99 = ks_pvalue(1.6276 / (n as f64).sqrt(), n);
        let p95 = ks_pvalue(1.3581 / (n as f64).sqrt(), n);
        assert!((p99 - 0.01).abs() < 2e-4, "{p99}");
        assert!((p95 - 0.05).abs() < 5e-4, "{p95}");
    }

    #[test]
    fn cell_marginal_is_piecewise_linear() {
        let g = make_grid(GridSpec::cube(1, 0.0, 16.0, 16)).unwrap();
        let rho = vec![1.0; 16];
        let m = CellMarginal::new(&g, &rho, 0);
        assert_eq!(m.cdf(-0.5), 0.0);
        assert!((m.cdf(7.5) - 0.5).abs() < 1e-15);
        assert!((m.cdf(0.0) - 1.0 / 32.0).abs() < 1e-15);
        assert_eq!(m.cdf(15.5), 1.0);
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        let r = chi_square(&[100, 100, 1, 0], &[0.5, 0.49, 0.005, 0.005]).unwrap();
        assert_eq!(r.dof, 1);
        assert!(r.pvalue > 0.5);
        let bad = chi_square(&[200, 0], &[0.5, 0.5]).unwrap();
        assert!(bad.pvalue < 1e-10);
    }
}
