//! Wave functions on a grid: construction, normalization and algebra.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, GridSpec};

/// Probability allowed outside the box for a freshly built packet.
pub const BOUNDARY_TAIL_LIMIT: f64 = 1e-10;

/// Tolerance below which two branch states count as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub masses: Vec<f64>,
}

impl PhysicalParams {
    pub fn new(hbar: f64, masses: Vec<f64>) -> Result<Self> {
        let p = Self { hbar, masses };
        let problems = p.violations(None);
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(Error::Params(problems.join("; ")))
        }
    }

    /// ℏ = 1 and unit masses.
    pub fn natural(dim: usize) -> Self {
        Self { hbar: 1.0, masses: vec![1.0; dim] }
    }

    pub fn violations(&self, dim: Option<usize>) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            out.push(format!("hbar must be positive, got {}", self.hbar));
        }
        for (k, m) in self.masses.iter().enumerate() {
            if !(*m > 0.0 && m.is_finite()) {
                out.push(format!("mass {k} must be positive, got {m}"));
            }
        }
        if let Some(d) = dim {
            if self.masses.len() != d {
                out.push(format!("{} masses given for a {}-dimensional grid", self.masses.len(), d));
            }
        }
        out
    }

    pub(crate) fn check_for(&self, grid: &Grid) -> Result<()> {
        let problems = self.violations(Some(grid.dim()));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Params(problems.join("; ")))
        }
    }

    /// Every mass multiplied by `factor`.
    pub fn scale_masses(&self, factor: f64) -> Self {
        Self { hbar: self.hbar, masses: self.masses.iter().map(|m| m * factor).collect() }
    }

    /// `ℏ²/(2 m_k)` per axis, the kinetic coefficients of the Hamiltonian.
    pub fn kinetic_weights(&self) -> Vec<f64> {
        self.masses.iter().map(|m| self.hbar * self.hbar / (2.0 * m)).collect()
    }
}

/// A complex amplitude field over a grid. Constructors return unit-norm states.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    params: PhysicalParams,
    amplitudes: Vec<C64>,
    time: f64,
}

impl WaveFunction {
    /// Normalizes `amplitudes` to unit grid-quadrature norm.
    pub fn new(grid: Arc<Grid>, params: PhysicalParams, amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let mut psi = Self::unnormalized(grid, params, amplitudes, time)?;
        let n = psi.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InitialState(format!("cannot normalize a state of norm {n}")));
        }
        psi.amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(psi)
    }

    /// Wraps amplitudes as given, without normalizing.
    pub fn unnormalized(grid: Arc<Grid>, params: PhysicalParams, amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        params.check_for(&grid)?;
        if amplitudes.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, params, amplitudes, time })
    }

    /// Build from a function of position.
    pub fn from_fn(grid: Arc<Grid>, params: PhysicalParams, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let mut q = vec![0.0; grid.dim()];
        let amps = (0..grid.len())
            .map(|flat| {
                for (k, x) in q.iter_mut().enumerate() {
                    *x = grid.coord_of(flat, k);
                }
                f(&q)
            })
            .collect();
        Self::new(grid, params, amps, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn with_params(mut self, params: PhysicalParams) -> Result<Self> {
        params.check_for(&self.grid)?;
        self.params = params;
        Ok(self)
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Grid-quadrature L² norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        self.same_grid(other)?;
        let s: C64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `|ψ|²` at every grid point.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// L² distance `‖self − other‖`.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// `c·ψ`, left unnormalized.
    pub fn scaled(&self, c: C64) -> WaveFunction {
        Self { amplitudes: self.amplitudes.iter().map(|z| z * c).collect(), ..self.clone() }
    }

    pub fn normalized(&self) -> Result<WaveFunction> {
        Self::new(self.grid.clone(), self.params.clone(), self.amplitudes.clone(), self.time)
    }

    pub fn conj(&self) -> WaveFunction {
        Self { amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(), ..self.clone() }
    }

    /// Multiply pointwise by `exp(i·phase(q))`.
    pub fn with_phase(&self, phase: impl Fn(&[f64]) -> f64) -> WaveFunction {
        let mut q = vec![0.0; self.grid.dim()];
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(flat, z)| {
                for (k, x) in q.iter_mut().enumerate() {
                    *x = self.grid.coord_of(flat, k);
                }
                z * C64::from_polar(1.0, phase(&q))
            })
            .collect();
        Self { amplitudes, ..self.clone() }
    }

    pub(crate) fn same_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("wave functions live on different grids".into()));
        }
        Ok(())
    }

    /// Expectation of coordinate `k` under `|ψ|²`, normalized by the norm.
    pub fn mean_position(&self, k: usize) -> f64 {
        let (num, den) = self
            .amplitudes
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(n, d), (flat, z)| {
                let r = z.norm_sqr();
                (n + r * self.grid.coord_of(flat, k), d + r)
            });
        num / den
    }

    pub fn variance(&self, k: usize) -> f64 {
        let mean = self.mean_position(k);
        let (num, den) = self
            .amplitudes
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(n, d), (flat, z)| {
                let r = z.norm_sqr();
                (n + r * (self.grid.coord_of(flat, k) - mean).powi(2), d + r)
            });
        num / den
    }

    /// Probability within the boundary strip (see [`Grid::BOUNDARY_STRIP`]).
    pub fn boundary_mass(&self) -> f64 {
        let strip = self.grid.boundary_strip_mask();
        self.boundary_mass_with(&strip)
    }

    pub(crate) fn boundary_mass_with(&self, strip: &[bool]) -> f64 {
        let s: f64 = self.amplitudes.iter().zip(strip).filter(|(_, &b)| b).map(|(z, _)| z.norm_sqr()).sum();
        s * self.grid.cell_volume() / self.norm_sqr()
    }
}

/// A Gaussian packet `exp(−Σ(q−c)²/(4σ²) + i k·q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacket {
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub momentum: Vec<f64>,
}

impl GaussianPacket {
    pub fn new(center: Vec<f64>, sigma: Vec<f64>, momentum: Vec<f64>) -> Self {
        Self { center, sigma, momentum }
    }

    /// Problems with this packet on `grid`, excluding the boundary-tail check.
    pub fn violations(&self, grid: &Grid) -> Vec<String> {
        let d = grid.dim();
        let mut out = Vec::new();
        if self.center.len() != d || self.sigma.len() != d || !(self.momentum.is_empty() || self.momentum.len() == d) {
            out.push(format!("packet vectors must have {d} components"));
            return out;
        }
        if !grid.contains(&self.center) {
            out.push(format!("center {:?} outside the grid", self.center));
        }
        for (k, s) in self.sigma.iter().enumerate() {
            let min = 4.0 * grid.dx()[k];
            if !(*s >= min) {
                out.push(format!("sigma {s} on axis {k} is under-resolved (needs >= 4*dx = {min})"));
            }
        }
        out
    }

    /// Gaussian probability lying outside the box, from the analytic marginals.
    pub fn tail_mass(&self, grid: &Grid) -> f64 {
        let inside: f64 = (0..grid.dim())
            .map(|k| {
                let ax = grid.axis(k);
                let s = self.sigma[k] * std::f64::consts::SQRT_2;
                let lo = 0.5 * erfc((self.center[k] - ax.lower) / s);
                let hi = 0.5 * erfc((ax.upper - self.center[k]) / s);
                1.0 - lo - hi
            })
            .product();
        1.0 - inside
    }

    pub fn amplitude(&self, q: &[f64]) -> C64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..q.len() {
            let d = q[k] - self.center[k];
            re -= d * d / (4.0 * self.sigma[k] * self.sigma[k]);
            if let Some(p) = self.momentum.get(k) {
                im += p * q[k];
            }
        }
        C64::new(re, im).exp()
    }

    pub fn build(&self, grid: Arc<Grid>, params: PhysicalParams) -> Result<WaveFunction> {
        self.build_with_tail_limit(grid, params, BOUNDARY_TAIL_LIMIT)
    }

    pub fn build_with_tail_limit(&self, grid: Arc<Grid>, params: PhysicalParams, limit: f64) -> Result<WaveFunction> {
        let problems = self.violations(&grid);
        if !problems.is_empty() {
            return Err(Error::InitialState(problems.join("; ")));
        }
        let mass = self.tail_mass(&grid);
        if mass > limit {
            return Err(Error::BoundaryTail { mass, limit });
        }
        WaveFunction::from_fn(grid, params, |q| self.amplitude(q))
    }
}

pub fn init_gaussian(
    grid: Arc<Grid>,
    params: PhysicalParams,
    center: &[f64],
    sigma: &[f64],
    momentum: &[f64],
) -> Result<WaveFunction> {
    GaussianPacket::new(center.to_vec(), sigma.to_vec(), momentum.to_vec()).build(grid, params)
}

/// Normalized plane wave `exp(i k·q)`; exact on periodic grids when `k` is a grid mode.
pub fn plane_wave(grid: Arc<Grid>, params: PhysicalParams, k: &[f64]) -> Result<WaveFunction> {
    WaveFunction::from_fn(grid, params, |q| {
        C64::from_polar(1.0, q.iter().zip(k).map(|(x, kk)| x * kk).sum())
    })
}

/// Result of [`superpose`].
#[derive(Debug, Clone)]
pub struct Superposition {
    pub state: WaveFunction,
    /// `|c_i|²` shares of the total, present when the inputs are orthogonal.
    pub branch_weights: Option<[f64; 2]>,
}

/// Normalized `c1·ψ1 + c2·ψ2`.
pub fn superpose(psi1: &WaveFunction, psi2: &WaveFunction, c1: C64, c2: C64) -> Result<Superposition> {
    psi1.same_grid(psi2)?;
    if psi1.params != psi2.params {
        return Err(Error::ShapeMismatch("wave functions carry different physical parameters".into()));
    }
    let amps: Vec<C64> = psi1.amplitudes.iter().zip(&psi2.amplitudes).map(|(a, b)| c1 * a + c2 * b).collect();
    let raw = WaveFunction::unnormalized(psi1.grid.clone(), psi1.params.clone(), amps, psi1.time)?;
    let n = raw.norm();
    if n < 1e-12 {
        return Err(Error::DestructiveCancellation(n));
    }
    let overlap = psi1.inner(psi2)?.norm() / (psi1.norm() * psi2.norm());
    let branch_weights = (overlap < ORTHOGONALITY_TOL).then(|| {
        let w1 = c1.norm_sqr() * psi1.norm_sqr();
        let w2 = c2.norm_sqr() * psi2.norm_sqr();
        [w1 / (w1 + w2), w2 / (w1 + w2)]
    });
    Ok(Superposition { state: raw.normalized()?, branch_weights })
}

/// Product state on the Cartesian product of the factors' grids.
pub fn tensor_product(factors: &[&WaveFunction]) -> Result<WaveFunction> {
    let mut axes = Vec::new();
    let mut masses = Vec::new();
    let boundary = factors.first().map_or(Boundary::Periodic, |f| f.grid.boundary());
    for f in factors {
        if f.grid.boundary() != boundary || f.params.hbar != factors[0].params.hbar {
            return Err(Error::ShapeMismatch("factors disagree on boundary or hbar".into()));
        }
        axes.extend(f.grid.spec().axes.iter().cloned());
        masses.extend(f.params.masses.iter().copied());
    }
    let grid = Arc::new(Grid::new(GridSpec { axes, boundary, max_points: usize::MAX })?);
    let params = PhysicalParams::new(factors[0].params.hbar, masses)?;
    let dims: Vec<usize> = factors.iter().map(|f| f.grid.dim()).collect();
    let mut idx = vec![0usize; grid.dim()];
    let amps = (0..grid.len())
        .map(|flat| {
            grid.unflatten(flat, &mut idx);
            let mut off = 0;
            let mut z = C64::new(1.0, 0.0);
            for (f, d) in factors.iter().zip(&dims) {
                z *= f.amplitudes[f.grid.flatten(&idx[off..off + d])];
                off += d;
            }
            z
        })
        .collect();
    WaveFunction::new(grid, params, amps, 0.0)
}

/// Two-component spinor field; the norm sums both components.
#[derive(Debug, Clone)]
pub struct SpinorWaveFunction {
    grid: Arc<Grid>,
    params: PhysicalParams,
    components: [Vec<C64>; 2],
    time: f64,
}

impl SpinorWaveFunction {
    pub fn new(grid: Arc<Grid>, params: PhysicalParams, up: Vec<C64>, down: Vec<C64>) -> Result<Self> {
        params.check_for(&grid)?;
        if up.len() != grid.len() || down.len() != grid.len() {
            return Err(Error::ShapeMismatch("spinor component length differs from grid".into()));
        }
        let total: f64 = up.iter().chain(&down).map(|z| z.norm_sqr()).sum::<f64>() * grid.cell_volume();
        let n = total.sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InitialState(format!("cannot normalize a spinor of norm {n}")));
        }
        let scale = |v: Vec<C64>| v.into_iter().map(|z| z / n).collect::<Vec<_>>();
        Ok(Self { grid, params, components: [scale(up), scale(down)], time: 0.0 })
    }

    pub fn from_states(up: &WaveFunction, down: &WaveFunction) -> Result<Self> {
        up.same_grid(down)?;
        Self::new(up.grid.clone(), up.params.clone(), up.amplitudes.clone(), down.amplitudes.clone())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn component(&self, i: usize) -> &[C64] {
        &self.components[i]
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.components.iter().flatten().map(|z| z.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// `Ψ*Ψ` summed over components.
    pub fn density(&self) -> Vec<f64> {
        self.components[0].iter().zip(&self.components[1]).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    fn grid1(l: f64, n: usize) -> Arc<Grid> {
        Arc::new(make_grid(GridSpec::cube(1, -l, l, n)).unwrap())
    }

    #[test]
    fn gaussian_is_normalized_and_centered() {
        let g = grid1(16.0, 512);
        let psi = init_gaussian(g.clone(), PhysicalParams::natural(1), &[0.3], &[1.0], &[2.0]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        // quadrature oracle Σ q|ψ|² dx
        let dx = g.dx()[0];
        let mean: f64 = psi.density().iter().zip(g.coords(0)).map(|(r, x)| r * x * dx).sum();
        assert!((mean - 0.3).abs() < 1e-10, "{mean}");
        let total: f64 = psi.density().iter().sum::<f64>() * dx;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_variance_matches_sigma() {
        let g = grid1(16.0, 256);
        let sigma = 8.0 * g.dx()[0];
        let psi = init_gaussian(g.clone(), PhysicalParams::natural(1), &[0.0], &[sigma], &[0.0]).unwrap();
        let dx = g.dx()[0];
        let var: f64 = psi.density().iter().zip(g.coords(0)).map(|(r, x)| r * x * x * dx).sum();
        assert!((var / (sigma * sigma) - 1.0).abs() < 1e-3, "{var}");
    }

    #[test]
    fn gaussian_guards() {
        let g = grid1(8.0, 64);
        let p = PhysicalParams::natural(1);
        assert!(matches!(init_gaussian(g.clone(), p.clone(), &[9.0], &[1.0], &[0.0]), Err(Error::InitialState(_))));
        assert!(matches!(init_gaussian(g.clone(), p.clone(), &[0.0], &[0.2], &[0.0]), Err(Error::InitialState(_))));
        assert!(matches!(
            init_gaussian(g.clone(), p.clone(), &[6.0], &[1.0], &[0.0]),
            Err(Error::BoundaryTail { .. })
        ));
        assert!(init_gaussian(g, p, &[0.0], &[1.0], &[0.0]).is_ok());
    }

    #[test]
    fn superposition_cases() {
        let g = grid1(16.0, 256);
        let p = PhysicalParams::natural(1);
        let a = init_gaussian(g.clone(), p.clone(), &[-5.0], &[0.5], &[0.0]).unwrap();
        let b = init_gaussian(g.clone(), p.clone(), &[5.0], &[0.5], &[0.0]).unwrap();
        let one = C64::new(1.0, 0.0);
        assert!(matches!(superpose(&a, &a, one, -one), Err(Error::DestructiveCancellation(_))));
        let same = superpose(&a, &a, one, one).unwrap().state;
        assert!(same.distance(&a).unwrap() < 1e-12);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = superpose(&a, &b, h, h).unwrap();
        // inner-product oracle: weights are |⟨ψ_i|Ψ⟩|²
        let w = s.branch_weights.unwrap();
        let wa = a.inner(&s.state).unwrap().norm_sqr();
        assert!((w[0] - 0.5).abs() < 1e-10 && (w[1] - 0.5).abs() < 1e-10);
        assert!((wa - 0.5).abs() < 1e-10);
    }

    #[test]
    fn overlap_of_distant_gaussians() {
        let g = grid1(16.0, 512);
        let p = PhysicalParams::natural(1);
        let a = init_gaussian(g.clone(), p.clone(), &[-6.0], &[0.5], &[0.0]).unwrap();
        let b = init_gaussian(g, p, &[0.0], &[0.5], &[0.0]).unwrap();
        // analytic overlap exp(−d²/(8σ²)) with d = 12σ, i.e. e^{−18}
        let overlap = a.inner(&b).unwrap().norm();
        assert!((overlap / (-18.0f64).exp() - 1.0).abs() < 1e-6, "{overlap}");
        assert!((a.inner(&a).unwrap().re - a.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn product_state_layout() {
        let g = grid1(8.0, 128);
        let p = PhysicalParams::natural(1);
        let a = init_gaussian(g.clone(), p.clone(), &[-1.0], &[0.6], &[1.0]).unwrap();
        let b = init_gaussian(g, p, &[2.0], &[0.8], &[0.0]).unwrap();
        let ab = tensor_product(&[&a, &b]).unwrap();
        assert_eq!(ab.grid().dim(), 2);
        assert!((ab.norm() - 1.0).abs() < 1e-12);
        assert!((ab.mean_position(0) + 1.0).abs() < 1e-9);
        assert!((ab.mean_position(1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn spinor_norm() {
        let g = grid1(8.0, 64);
        let p = PhysicalParams::natural(1);
        let a = plane_wave(g.clone(), p.clone(), &[0.0]).unwrap();
        let s = SpinorWaveFunction::from_states(&a, &a).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::new(0.0, vec![1.0]).is_err());
        assert!(PhysicalParams::new(1.0, vec![-1.0]).is_err());
        let g = grid1(8.0, 64);
        let amps = vec![C64::new(1.0, 0.0); 64];
        assert!(WaveFunction::new(g, PhysicalParams::natural(2), amps, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn superposition_is_linear(re1 in -2.0f64..2.0, im1 in -2.0f64..2.0, re2 in -2.0f64..2.0, im2 in -2.0f64..2.0, x in -3.0f64..3.0) {
            let g = grid1(16.0, 128);
            let p = PhysicalParams::natural(1);
            let a = init_gaussian(g.clone(), p.clone(), &[x], &[1.0], &[1.0]).unwrap();
            let b = init_gaussian(g.clone(), p.clone(), &[-1.0], &[1.5], &[-0.5]).unwrap();
            let phi = init_gaussian(g.clone(), p.clone(), &[0.5], &[2.0], &[0.3]).unwrap();
            let (c1, c2) = (C64::new(re1, im1), C64::new(re2, im2));
            let amps: Vec<C64> = a.amplitudes().iter().zip(b.amplitudes()).map(|(u, v)| c1 * u + c2 * v).collect();
            let raw = WaveFunction::unnormalized(g, p, amps, 0.0).unwrap();
            let lhs = phi.inner(&raw).unwrap();
            let rhs = c1 * phi.inner(&a).unwrap() + c2 * phi.inner(&b).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn norm_ignores_global_phase(alpha in 0.0f64..6.3) {
            let g = grid1(16.0, 128);
            let a = init_gaussian(g, PhysicalParams::natural(1), &[0.0], &[1.0], &[2.0]).unwrap();
            let rotated = a.scaled(C64::from_polar(1.0, alpha));
            prop_assert!((rotated.norm() - 1.0).abs() < 1e-12);
            prop_assert!(a.density().iter().all(|r| *r >= 0.0));
        }
    }
}
