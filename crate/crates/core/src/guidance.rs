//! The guiding velocity field `v_k = (ℏ/m_k)·Im[∂_kψ/ψ]`, its spinor form, the
//! probability current, and off-grid evaluation on frame series.
//!
//! Off-grid values interpolate ψ and ∇ψ (cubic in space, linear in time) and
//! only then divide, so `cψ` and `ψ` give the same velocity.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldio::{FieldKind, FieldManifest, FieldWriter};
use crate::grid::Grid;
use crate::interp::Stencil;
use crate::propagator::FrameSeries;
use crate::spectral::FieldOps;
use crate::state::{PhysicalParams, SpinorWaveFunction, WaveFunction};

/// How close to a node the velocity may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePolicy {
    /// Node threshold as a fraction of the mean density.
    #[serde(default = "default_node_fraction")]
    pub node_fraction: f64,
    /// Speed cap in grid spacings (smallest axis) per unit time.
    #[serde(default = "default_speed_cap")]
    pub speed_cap_cells: f64,
}

fn default_node_fraction() -> f64 {
    1e-12
}

fn default_speed_cap() -> f64 {
    1e3
}

impl Default for NodePolicy {
    fn default() -> Self {
        Self { node_fraction: default_node_fraction(), speed_cap_cells: default_speed_cap() }
    }
}

impl NodePolicy {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.node_fraction > 0.0) {
            out.push("node threshold must be positive".into());
        }
        if !(self.speed_cap_cells > 0.0) {
            out.push("speed cap must be positive".into());
        }
        out
    }

    /// Density threshold `ε_node` for a state of squared norm `norm_sqr`.
    pub fn threshold(&self, grid: &Grid, norm_sqr: f64) -> f64 {
        self.node_fraction * norm_sqr / grid.volume()
    }

    pub fn speed_cap(&self, grid: &Grid) -> f64 {
        self.speed_cap_cells * grid.min_dx()
    }
}

/// Velocity on the grid; masked points hold NaN.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: Arc<Grid>,
    pub components: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    /// Points whose speed was clamped to the cap.
    pub clamped: usize,
}

impl VelocityField {
    pub fn at(&self, flat: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[flat]).collect()
    }

    /// Largest |component| over unmasked points.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Export as a one-record real vector field.
    pub fn write_dir(&self, dir: &Path, params: &PhysicalParams, time: f64) -> Result<()> {
        let names = (0..self.grid.dim()).map(|k| format!("v{k}")).collect();
        write_vector_record(dir, &self.grid, params, names, time, &self.components)
    }
}

pub(crate) fn write_vector_record(
    dir: &Path,
    grid: &Grid,
    params: &PhysicalParams,
    names: Vec<String>,
    time: f64,
    components: &[Vec<f64>],
) -> Result<()> {
    let manifest = FieldManifest::new(FieldKind::RealVector, names, grid.spec().clone(), params.clone());
    let mut w = FieldWriter::create(dir, manifest)?;
    let refs: Vec<&[f64]> = components.iter().map(|c| c.as_slice()).collect();
    w.push_real(time, &refs)?;
    w.finish()?;
    Ok(())
}

fn finish_field(
    grid: &Arc<Grid>,
    policy: &NodePolicy,
    density: &[f64],
    mut components: Vec<Vec<f64>>,
    norm_sqr: f64,
) -> Result<VelocityField> {
    let eps = policy.threshold(grid, norm_sqr);
    let cap = policy.speed_cap(grid);
    let mask: Vec<bool> = density.iter().map(|r| *r >= eps).collect();
    let mut clamped = 0;
    for flat in 0..grid.len() {
        if !mask[flat] {
            components.iter_mut().for_each(|c| c[flat] = f64::NAN);
            continue;
        }
        let speed = components.iter().map(|c| c[flat] * c[flat]).sum::<f64>().sqrt();
        if !speed.is_finite() {
            return Err(Error::NonFiniteField(flat));
        }
        if speed > cap {
            components.iter_mut().for_each(|c| c[flat] *= cap / speed);
            clamped += 1;
        }
    }
    Ok(VelocityField { grid: grid.clone(), components, mask, clamped })
}

/// `v = (ℏ/m)·Im[∇ψ/ψ]` at every grid point.
pub fn velocity_grid(psi: &WaveFunction, policy: &NodePolicy) -> Result<VelocityField> {
    let ops = FieldOps::new(psi.grid().clone());
    let grad = ops.gradient_split(psi.amplitudes());
    let p = psi.params();
    let components = grad
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let c = p.hbar / p.masses[k];
            g.iter().zip(psi.amplitudes()).map(|(d, z)| c * (d / z).im).collect()
        })
        .collect();
    finish_field(psi.grid(), policy, &psi.density(), components, psi.norm_sqr())
}

/// Spinor form `v = (ℏ/m)·Im[Ψ*∇Ψ / Ψ*Ψ]` with the two-component scalar product.
pub fn velocity_spinor_grid(psi: &SpinorWaveFunction, policy: &NodePolicy) -> Result<VelocityField> {
    let ops = FieldOps::new(psi.grid().clone());
    let grads = [ops.gradient_split(psi.component(0)), ops.gradient_split(psi.component(1))];
    let density = psi.density();
    let p = psi.params();
    let components = (0..psi.grid().dim())
        .map(|k| {
            let c = p.hbar / p.masses[k];
            (0..psi.grid().len())
                .map(|flat| {
                    let num: C64 = (0..2).map(|s| psi.component(s)[flat].conj() * grads[s][k][flat]).sum();
                    c * num.im / density[flat]
                })
                .collect()
        })
        .collect();
    finish_field(psi.grid(), policy, &density, components, psi.norm().powi(2))
}

/// Probability current `J_k = (ℏ/m_k)·Im[ψ*∂_kψ]`.
pub fn current_grid(psi: &WaveFunction) -> Vec<Vec<f64>> {
    let ops = FieldOps::new(psi.grid().clone());
    let grad = ops.gradient_split(psi.amplitudes());
    let p = psi.params();
    grad.iter()
        .enumerate()
        .map(|(k, g)| {
            let c = p.hbar / p.masses[k];
            g.iter().zip(psi.amplitudes()).map(|(d, z)| c * (z.conj() * d).im).collect()
        })
        .collect()
}

pub fn write_current(dir: &Path, psi: &WaveFunction) -> Result<()> {
    let names = (0..psi.grid().dim()).map(|k| format!("j{k}")).collect();
    write_vector_record(dir, psi.grid(), psi.params(), names, psi.time(), &current_grid(psi))
}

/// ψ and ∇ψ of one frame, ready for interpolation.
#[derive(Debug, Clone)]
pub struct GuidingFrame {
    grid: Arc<Grid>,
    psi: Vec<C64>,
    grad: Vec<Vec<C64>>,
    time: f64,
}

impl GuidingFrame {
    pub fn new(psi: &WaveFunction, ops: &FieldOps) -> Self {
        Self {
            grid: psi.grid().clone(),
            psi: psi.amplitudes().to_vec(),
            grad: ops.gradient_split(psi.amplitudes()),
            time: psi.time(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn sample(&self, s: &Stencil, out: &mut [C64; 4]) {
        out[0] = s.apply(&self.psi);
        for (k, g) in self.grad.iter().enumerate() {
            out[k + 1] = s.apply(g);
        }
    }
}

/// Velocity evaluator between two bracketing frames.
#[derive(Debug, Clone, Copy)]
pub struct GuidingPair<'a> {
    pub early: &'a GuidingFrame,
    pub late: &'a GuidingFrame,
    pub params: &'a PhysicalParams,
    /// ε_node for interpolated densities.
    pub threshold: f64,
    pub speed_cap: f64,
}

impl<'a> GuidingPair<'a> {
    pub fn new(early: &'a GuidingFrame, late: &'a GuidingFrame, params: &'a PhysicalParams, policy: &NodePolicy, norm_sqr: f64) -> Self {
        Self {
            early,
            late,
            params,
            threshold: policy.threshold(&early.grid, norm_sqr),
            speed_cap: policy.speed_cap(&early.grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.early.grid
    }

    /// Interpolated ψ and ∇ψ at `(t, q)`.
    pub fn fields(&self, t: f64, q: &[f64]) -> Result<[C64; 4]> {
        let s = Stencil::new(&self.early.grid, q)?;
        let mut a = [C64::default(); 4];
        self.early.sample(&s, &mut a);
        let span = self.late.time - self.early.time;
        if span <= 0.0 {
            return Ok(a);
        }
        let w = ((t - self.early.time) / span).clamp(0.0, 1.0);
        if w == 0.0 {
            return Ok(a);
        }
        let mut b = [C64::default(); 4];
        self.late.sample(&s, &mut b);
        if w == 1.0 {
            return Ok(b);
        }
        let dim = self.early.grid.dim();
        for i in 0..=dim {
            a[i] = a[i] * (1.0 - w) + b[i] * w;
        }
        Ok(a)
    }

    /// Velocity at `(t, q)`; fails with a node encounter below ε_node.
    pub fn velocity(&self, t: f64, q: &[f64]) -> Result<[f64; 3]> {
        let f = self.fields(t, q)?;
        let density = f[0].norm_sqr();
        if !(density >= self.threshold) {
            return Err(Error::NodeEncounter { point: q.to_vec(), time: t, density });
        }
        let mut v = [0.0; 3];
        let dim = self.early.grid.dim();
        let mut speed2 = 0.0;
        for k in 0..dim {
            v[k] = self.params.hbar / self.params.masses[k] * (f[k + 1] / f[0]).im;
            speed2 += v[k] * v[k];
        }
        let speed = speed2.sqrt();
        if speed > self.speed_cap {
            v.iter_mut().for_each(|x| *x *= self.speed_cap / speed);
        }
        Ok(v)
    }
}

/// Velocity at an arbitrary configuration point and time within a series.
pub fn velocity_at(series: &FrameSeries, t: f64, q: &[f64], policy: &NodePolicy) -> Result<Vec<f64>> {
    let (i, _) = series.bracket(t)?;
    let ops = FieldOps::new(series.grid().clone());
    let f0 = series.frame(i)?;
    let early = GuidingFrame::new(&f0, &ops);
    let late = if series.len() > 1 { GuidingFrame::new(&*series.frame(i + 1)?, &ops) } else { early.clone() };
    let pair = GuidingPair::new(&early, &late, series.params(), policy, f0.norm_sqr());
    let v = pair.velocity(t, q)?;
    Ok(v[..series.grid().dim()].to_vec())
}

/// Velocity of a single state at an off-grid point.
pub fn velocity_of_state(psi: &WaveFunction, q: &[f64], policy: &NodePolicy) -> Result<Vec<f64>> {
    let ops = FieldOps::new(psi.grid().clone());
    let frame = GuidingFrame::new(psi, &ops);
    let pair = GuidingPair::new(&frame, &frame, psi.params(), policy, psi.norm_sqr());
    let v = pair.velocity(psi.time(), q)?;
    Ok(v[..psi.grid().dim()].to_vec())
}

/// Particle-1 velocities of a two-particle state at fixed `q1` and varying `q2`.
#[derive(Debug, Clone, Serialize)]
pub struct NonlocalityProbe {
    pub q1: f64,
    pub q2: Vec<f64>,
    pub velocities: Vec<f64>,
    /// max − min of the velocities.
    pub spread: f64,
}

pub fn nonlocality_probe(psi: &WaveFunction, q1: f64, q2_list: &[f64], policy: &NodePolicy) -> Result<NonlocalityProbe> {
    if psi.grid().dim() != 2 {
        return Err(Error::ShapeMismatch("nonlocality probe needs a two-particle (2D) configuration grid".into()));
    }
    let ops = FieldOps::new(psi.grid().clone());
    let frame = GuidingFrame::new(psi, &ops);
    let pair = GuidingPair::new(&frame, &frame, psi.params(), policy, psi.norm_sqr());
    let velocities = q2_list
        .iter()
        .map(|&q2| pair.velocity(psi.time(), &[q1, q2]).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = velocities.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    Ok(NonlocalityProbe { q1, q2: q2_list.to_vec(), velocities, spread: hi - lo })
}

/// `∂ρ/∂t + div J` at interior frame `i`, central difference in time.
pub fn continuity_residual(series: &FrameSeries, i: usize) -> Result<Vec<f64>> {
    if i == 0 || i + 1 >= series.len() {
        return Err(Error::Checkpoint(format!("frame {i} is not interior")));
    }
    let dt = series.frame_interval();
    let before = series.frame(i - 1)?.density();
    let after = series.frame(i + 1)?.density();
    let psi = series.frame(i)?;
    let ops = FieldOps::new(series.grid().clone());
    let current = current_grid(&psi);
    let mut residual: Vec<f64> = before.iter().zip(&after).map(|(a, b)| (b - a) / (2.0 * dt)).collect();
    for (k, j) in current.iter().enumerate() {
        let dj = ops.gradient_real(j).swap_remove(k);
        residual.iter_mut().zip(&dj).for_each(|(r, d)| *r += d);
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::{make_grid, GridSpec};
    use crate::state::{init_gaussian, plane_wave, tensor_product};

    fn ring(n: usize) -> Arc<Grid> {
        Arc::new(make_grid(GridSpec::cube(1, 0.0, 2.0 * PI, n)).unwrap())
    }

    #[test]
    fn plane_wave_velocity() {
        let g = ring(64);
        let psi = plane_wave(g, PhysicalParams::natural(1), &[5.0]).unwrap();
        let v = velocity_grid(&psi, &NodePolicy::default()).unwrap();
        assert!(v.components[0].iter().all(|x| (x - 5.0).abs() < 1e-10));
        assert_eq!(v.clamped, 0);
        let j = current_grid(&psi);
        let rho = 1.0 / (2.0 * PI);
        assert!(j[0].iter().all(|x| (x - 5.0 * rho).abs() < 1e-10));
    }

    #[test]
    fn real_state_has_no_velocity_or_current() {
        let g = Arc::new(make_grid(GridSpec::cube(1, -8.0, 8.0, 128)).unwrap());
        let psi = init_gaussian(g, PhysicalParams::natural(1), &[0.0], &[1.0 / 2f64.sqrt()], &[0.0]).unwrap();
        let v = velocity_grid(&psi, &NodePolicy::default()).unwrap();
        assert!(v.max_abs() < 1e-10);
        assert!(current_grid(&psi)[0].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn masked_points_are_nan() {
        let g = Arc::new(make_grid(GridSpec::cube(1, -16.0, 16.0, 256)).unwrap());
        let psi = init_gaussian(g, PhysicalParams::natural(1), &[0.0], &[0.5], &[1.0]).unwrap();
        let v = velocity_grid(&psi, &NodePolicy::default()).unwrap();
        assert!(v.mask.iter().any(|m| !m));
        for (m, x) in v.mask.iter().zip(&v.components[0]) {
            assert_eq!(*m, !x.is_nan());
        }
    }

    #[test]
    fn spinor_reductions() {
        let g = ring(64);
        let p = PhysicalParams::natural(1);
        let policy = NodePolicy::default();
        let psi = init_gaussian(
            Arc::new(make_grid(GridSpec::cube(1, -8.0, 8.0, 128)).unwrap()),
            p.clone(),
            &[0.5],
            &[1.0],
            &[1.5],
        )
        .unwrap();
        let zero = psi.scaled(C64::default());
        let s = SpinorWaveFunction::from_states(&psi, &zero).unwrap();
        let vs = velocity_spinor_grid(&s, &policy).unwrap();
        let vp = velocity_grid(&psi, &policy).unwrap();
        assert_eq!(vs.mask, vp.mask);
        // compare where FFT round-off relative to |ψ| stays small
        let rho = psi.density();
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        for (i, (a, b)) in vs.components[0].iter().zip(&vp.components[0]).enumerate() {
            if rho[i] > 1e-6 * peak {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} {b}");
            }
        }
        let a = plane_wave(g.clone(), p.clone(), &[3.0]).unwrap();
        let same = SpinorWaveFunction::from_states(&a, &a).unwrap();
        assert!(velocity_spinor_grid(&same, &policy).unwrap().components[0].iter().all(|v| (v - 3.0).abs() < 1e-10));
        // hand evaluation: Im[(ik1 + ik2)/2] = (k1 + k2)/2
        let b = plane_wave(g, p, &[-1.0]).unwrap();
        let mixed = SpinorWaveFunction::from_states(&a, &b).unwrap();
        assert!(velocity_spinor_grid(&mixed, &policy).unwrap().components[0].iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn product_state_velocity_ignores_partner() {
        let g = Arc::new(make_grid(GridSpec::cube(1, -8.0, 8.0, 128)).unwrap());
        let p = PhysicalParams::natural(1);
        let a = init_gaussian(g.clone(), p.clone(), &[-1.0], &[0.7], &[1.0]).unwrap();
        let b = init_gaussian(g, p, &[1.5], &[0.9], &[-2.0]).unwrap();
        let ab = tensor_product(&[&a, &b]).unwrap();
        let q2: Vec<f64> = (0..13).map(|i| -2.0 + 0.37 * i as f64).collect();
        let probe = nonlocality_probe(&ab, -0.8, &q2, &NodePolicy::default()).unwrap();
        assert!(probe.spread < 1e-12, "{}", probe.spread);
    }
}
