//! Discrete transforms and derivatives on row-major grid fields.
//!
//! Periodic grids differentiate spectrally; Dirichlet grids use second-order
//! central differences with zero ghost values past the walls.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Multi-dimensional FFT plus derivative operators bound to one grid.
pub struct FieldOps {
    grid: Arc<Grid>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FieldOps {
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = (0..grid.dim()).map(|k| planner.plan_fft_forward(grid.points(k))).collect();
        let inverse = (0..grid.dim()).map(|k| planner.plan_fft_inverse(grid.points(k))).collect();
        Self { grid, forward, inverse }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// In-place unnormalized forward transform over all axes.
    pub fn forward(&self, data: &mut [C64]) {
        for k in 0..self.grid.dim() {
            self.along_axis(data, k, &self.forward[k]);
        }
    }

    /// In-place inverse transform over all axes, scaled by 1/N.
    pub fn inverse(&self, data: &mut [C64]) {
        for k in 0..self.grid.dim() {
            self.along_axis(data, k, &self.inverse[k]);
        }
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn along_axis(&self, data: &mut [C64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points(axis);
        let stride = self.grid.strides()[axis];
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            return;
        }
        let block = n * stride;
        let mut line = vec![C64::default(); n];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, z) in line.iter_mut().enumerate() {
                    *z = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, z) in line.iter().enumerate() {
                    data[base + j * stride] = *z;
                }
            }
        }
    }

    /// Wave number of axis `k` at flat offset `flat`, in FFT order.
    fn wavenumber_at(&self, flat: usize, k: usize) -> f64 {
        let i = (flat / self.grid.strides()[k]) % self.grid.points(k);
        self.grid.wavenumbers(k)[i]
    }

    /// Partial derivatives along every axis.
    pub fn gradient(&self, field: &[C64]) -> Vec<Vec<C64>> {
        if self.grid.is_periodic() {
            let mut spectrum = field.to_vec();
            self.forward(&mut spectrum);
            (0..self.grid.dim())
                .map(|k| {
                    let n = self.grid.points(k);
                    let mut d: Vec<C64> = spectrum
                        .iter()
                        .enumerate()
                        .map(|(flat, z)| {
                            let i = (flat / self.grid.strides()[k]) % n;
                            // the Nyquist mode has no odd-derivative partner
                            if i == n / 2 {
                                C64::default()
                            } else {
                                z * C64::new(0.0, self.grid.wavenumbers(k)[i])
                            }
                        })
                        .collect();
                    self.inverse(&mut d);
                    d
                })
                .collect()
        } else {
            (0..self.grid.dim()).map(|k| self.central_first(field, k)).collect()
        }
    }

    pub fn gradient_real(&self, field: &[f64]) -> Vec<Vec<f64>> {
        let z: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.gradient(&z).into_iter().map(|g| g.into_iter().map(|c| c.re).collect()).collect()
    }

    /// Gradient with real and imaginary parts differentiated separately, so a
    /// real field has an exactly real gradient.
    pub fn gradient_split(&self, field: &[C64]) -> Vec<Vec<C64>> {
        let re: Vec<f64> = field.iter().map(|z| z.re).collect();
        let im: Vec<f64> = field.iter().map(|z| z.im).collect();
        let gi = self.gradient_real(&im);
        self.gradient_real(&re)
            .into_iter()
            .zip(gi)
            .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| C64::new(x, y)).collect())
            .collect()
    }

    /// `Σ_k weights[k] · ∂²_k field`.
    pub fn weighted_laplacian(&self, field: &[C64], weights: &[f64]) -> Vec<C64> {
        if self.grid.is_periodic() {
            let mut spectrum = field.to_vec();
            self.forward(&mut spectrum);
            for (flat, z) in spectrum.iter_mut().enumerate() {
                let mut s = 0.0;
                for (k, w) in weights.iter().enumerate() {
                    let kk = self.wavenumber_at(flat, k);
                    s += w * kk * kk;
                }
                *z *= -s;
            }
            self.inverse(&mut spectrum);
            spectrum
        } else {
            let mut out = vec![C64::default(); field.len()];
            for (k, w) in weights.iter().enumerate() {
                let d2 = self.central_second(field, k);
                out.iter_mut().zip(d2).for_each(|(o, d)| *o += d * *w);
            }
            out
        }
    }

    pub fn weighted_laplacian_real(&self, field: &[f64], weights: &[f64]) -> Vec<f64> {
        let z: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.weighted_laplacian(&z, weights).into_iter().map(|c| c.re).collect()
    }

    fn neighbours(&self, flat: usize, axis: usize) -> (Option<usize>, Option<usize>) {
        let n = self.grid.points(axis);
        let s = self.grid.strides()[axis];
        let i = (flat / s) % n;
        let lo = if i > 0 { Some(flat - s) } else { None };
        let hi = if i + 1 < n { Some(flat + s) } else { None };
        (lo, hi)
    }

    fn central_first(&self, field: &[C64], axis: usize) -> Vec<C64> {
        let h = self.grid.dx()[axis];
        (0..field.len())
            .map(|flat| {
                let (lo, hi) = self.neighbours(flat, axis);
                let f_lo = lo.map_or(C64::default(), |i| field[i]);
                let f_hi = hi.map_or(C64::default(), |i| field[i]);
                (f_hi - f_lo) / (2.0 * h)
            })
            .collect()
    }

    fn central_second(&self, field: &[C64], axis: usize) -> Vec<C64> {
        let h2 = self.grid.dx()[axis].powi(2);
        (0..field.len())
            .map(|flat| {
                let (lo, hi) = self.neighbours(flat, axis);
                let f_lo = lo.map_or(C64::default(), |i| field[i]);
                let f_hi = hi.map_or(C64::default(), |i| field[i]);
                (f_hi - 2.0 * field[flat] + f_lo) / h2
            })
            .collect()
    }
}

/// Central-difference gradient of a real field, one-sided at the array ends.
/// Used for potentials, which need not be periodic.
pub fn finite_difference_gradient(grid: &Grid, field: &[f64]) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let n = grid.points(axis);
            let s = grid.strides()[axis];
            let h = grid.dx()[axis];
            (0..field.len())
                .map(|flat| {
                    let i = (flat / s) % n;
                    if i == 0 {
                        (field[flat + s] - field[flat]) / h
                    } else if i + 1 == n {
                        (field[flat] - field[flat - s]) / h
                    } else {
                        (field[flat + s] - field[flat - s]) / (2.0 * h)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::{make_grid, AxisSpec, Boundary, GridSpec};

    fn ops(spec: GridSpec) -> FieldOps {
        FieldOps::new(Arc::new(make_grid(spec).unwrap()))
    }

    #[test]
    fn round_trip_2d() {
        let o = ops(GridSpec::new(vec![AxisSpec::new(0.0, 1.0, 16), AxisSpec::new(0.0, 1.0, 32)]));
        let data: Vec<C64> = (0..512).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut work = data.clone();
        o.forward(&mut work);
        o.inverse(&mut work);
        let err = data.iter().zip(&work).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn derivative_of_grid_mode_is_exact() {
        let o = ops(GridSpec::new(vec![AxisSpec::new(0.0, 2.0 * PI, 32), AxisSpec::new(0.0, 2.0 * PI, 16)]));
        let g = o.grid().clone();
        let f: Vec<C64> = (0..g.len())
            .map(|i| C64::new(0.0, 3.0 * g.coord_of(i, 0) - 2.0 * g.coord_of(i, 1)).exp())
            .collect();
        let grad = o.gradient(&f);
        for i in 0..g.len() {
            assert!((grad[0][i] - C64::new(0.0, 3.0) * f[i]).norm() < 1e-12);
            assert!((grad[1][i] - C64::new(0.0, -2.0) * f[i]).norm() < 1e-12);
        }
        let lap = o.weighted_laplacian(&f, &[1.0, 0.5]);
        for i in 0..g.len() {
            assert!((lap[i] + 11.0 * f[i]).norm() < 1e-11);
        }
    }

    #[test]
    fn dirichlet_differences_are_second_order() {
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let o = ops(GridSpec::cube(1, 0.0, 1.0, n).with_boundary(Boundary::Dirichlet));
            let g = o.grid().clone();
            let f: Vec<C64> = g.coords(0).iter().map(|&x| C64::new((PI * x).sin(), 0.0)).collect();
            let lap = o.weighted_laplacian(&f, &[1.0]);
            let err = g
                .coords(0)
                .iter()
                .zip(&lap)
                .skip(1)
                .map(|(&x, l)| (l.re + PI * PI * (PI * x).sin()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn finite_difference_gradient_of_quadratic() {
        let g = make_grid(GridSpec::cube(1, -4.0, 4.0, 64)).unwrap();
        let v: Vec<f64> = g.coords(0).iter().map(|x| 0.5 * x * x).collect();
        let d = finite_difference_gradient(&g, &v);
        for (i, &x) in g.coords(0).iter().enumerate().skip(1).take(62) {
            assert!((d[0][i] - x).abs() < 1e-12);
        }
    }
}
