//! Polar form `ψ = R·e^{iS/ℏ}`, the quantum potential and force, the
//! modified Hamilton–Jacobi residual, and comparisons with Newtonian motion.
//!
//! The quantum potential is a diagnostic only; trajectories in the rest of
//! the crate follow the first-order guiding law.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{integrate_trajectory, EnsembleSpec, PathStatus};
use crate::error::{Error, Result};
use crate::fieldio::{FieldKind, FieldManifest, FieldWriter};
use crate::grid::{Grid, GridSpec};
use crate::guidance::{velocity_at, NodePolicy};
use crate::interp::Stencil;
use crate::potential::{Potential, PotentialKind};
use crate::propagator::{evolve, FrameSeries, PropagatorSpec};
use crate::spectral::FieldOps;
use crate::state::{GaussianPacket, PhysicalParams, WaveFunction};

/// `R`, `S` and `U` of one state. `S` and `U` are NaN off the mask.
#[derive(Debug, Clone)]
pub struct PolarFields {
    pub grid: Arc<Grid>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub mask: Vec<bool>,
    /// Unwrapping component of each masked point; `u32::MAX` off the mask.
    pub component: Vec<u32>,
    pub components: usize,
    pub warnings: Vec<String>,
    hbar: f64,
}

impl PolarFields {
    /// `R·e^{iS/ℏ}` on the mask, zero elsewhere.
    pub fn reconstruct(&self) -> Vec<C64> {
        self.r
            .iter()
            .zip(&self.s)
            .zip(&self.mask)
            .map(|((r, s), m)| if *m { C64::from_polar(*r, s / self.hbar) } else { C64::default() })
            .collect()
    }

    /// Export `R`, `S`, `U` as one real vector record.
    pub fn write_dir(&self, dir: &Path, params: &PhysicalParams, time: f64) -> Result<()> {
        let names = vec!["R".into(), "S".into(), "U".into()];
        let manifest = FieldManifest::new(FieldKind::RealVector, names, self.grid.spec().clone(), params.clone());
        let mut w = FieldWriter::create(dir, manifest)?;
        w.push_real(time, &[&self.r, &self.s, &self.u])?;
        w.finish()?;
        Ok(())
    }
}

pub fn polar_decompose(psi: &WaveFunction) -> Result<PolarFields> {
    polar_decompose_with(psi, &NodePolicy::default())
}

pub fn polar_decompose_with(psi: &WaveFunction, policy: &NodePolicy) -> Result<PolarFields> {
    let grid = psi.grid().clone();
    let density = psi.density();
    let eps = policy.threshold(&grid, psi.norm_sqr());
    let mask: Vec<bool> = density.iter().map(|r| *r >= eps).collect();
    let r: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm()).collect();
    let (phase, component, components) = unwrap_phase(&grid, psi.amplitudes(), &density, &mask);
    let hbar = psi.params().hbar;
    let s = phase.iter().map(|p| hbar * p).collect();
    let mut warnings = Vec::new();
    if components > 1 {
        warnings.push(format!(
            "mask splits into {components} components; S is comparable only within a component"
        ));
    }
    let u = masked_quantum_potential(psi, &r, &mask)?;
    Ok(PolarFields { grid, r, s, u, mask, component, components, warnings, hbar })
}

/// Flood-fill unwrapping from the densest point of each mask component.
/// Neighbours are taken along grid axes without wrapping around.
fn unwrap_phase(grid: &Grid, psi: &[C64], density: &[f64], mask: &[bool]) -> (Vec<f64>, Vec<u32>, usize) {
    let n = grid.len();
    let mut phase = vec![f64::NAN; n];
    let mut component = vec![u32::MAX; n];
    let mut order: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
    let dim = grid.dim();
    let mut idx = vec![0usize; dim];
    let mut queue = VecDeque::new();
    let mut count = 0u32;
    for &seed in &order {
        if component[seed] != u32::MAX {
            continue;
        }
        component[seed] = count;
        phase[seed] = psi[seed].arg();
        queue.push_back(seed);
        while let Some(c) = queue.pop_front() {
            grid.unflatten(c, &mut idx);
            for k in 0..dim {
                let stride = grid.strides()[k];
                let candidates = [
                    (idx[k] > 0).then(|| c - stride),
                    (idx[k] + 1 < grid.points(k)).then(|| c + stride),
                ];
                for nb in candidates.into_iter().flatten() {
                    if !mask[nb] || component[nb] != u32::MAX {
                        continue;
                    }
                    // snap to the 2π multiple nearest the continued phase
                    let continued = phase[c] + (psi[nb] * psi[c].conj()).arg();
                    let local = psi[nb].arg();
                    phase[nb] = local + 2.0 * PI * ((continued - local) / (2.0 * PI)).round();
                    component[nb] = count;
                    queue.push_back(nb);
                }
            }
        }
        count += 1;
    }
    (phase, component, count as usize)
}

fn masked_quantum_potential(psi: &WaveFunction, r: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let ops = FieldOps::new(psi.grid().clone());
    let lr = ops.weighted_laplacian_real(r, &psi.params().kinetic_weights());
    let mut u = vec![f64::NAN; r.len()];
    for i in 0..r.len() {
        if mask[i] {
            u[i] = -lr[i] / r[i];
            if !u[i].is_finite() {
                return Err(Error::NonFiniteField(i));
            }
        }
    }
    Ok(u)
}

/// `U = −Σ (ℏ²/2m_k)·∂²_k R / R`, NaN below the node threshold.
pub fn quantum_potential(psi: &WaveFunction) -> Result<Vec<f64>> {
    let policy = NodePolicy::default();
    let eps = policy.threshold(psi.grid(), psi.norm_sqr());
    let r: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm()).collect();
    let mask: Vec<bool> = r.iter().map(|x| x * x >= eps).collect();
    masked_quantum_potential(psi, &r, &mask)
}

/// `R`, `∇R`, `LR = Σ (ℏ²/2m_k) ∂²_k R` and `∇(LR)` of one frame.
#[derive(Debug, Clone)]
struct ForceFrame {
    fields: Vec<Vec<f64>>,
    time: f64,
}

impl ForceFrame {
    fn new(psi: &WaveFunction, ops: &FieldOps) -> Self {
        let r: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm()).collect();
        let grad_r = ops.gradient_real(&r);
        let lr = ops.weighted_laplacian_real(&r, &psi.params().kinetic_weights());
        let grad_lr = ops.gradient_real(&lr);
        let mut fields = vec![r];
        fields.extend(grad_r);
        fields.push(lr);
        fields.extend(grad_lr);
        Self { fields, time: psi.time() }
    }
}

/// Quantum force `−∇U` between two frames, composed after interpolation.
struct ForcePair<'a> {
    early: &'a ForceFrame,
    late: &'a ForceFrame,
    grid: &'a Grid,
    threshold: f64,
}

impl ForcePair<'_> {
    fn force(&self, t: f64, q: &[f64]) -> Result<[f64; 3]> {
        let s = Stencil::new(self.grid, q)?;
        let span = self.late.time - self.early.time;
        let w = if span > 0.0 { ((t - self.early.time) / span).clamp(0.0, 1.0) } else { 0.0 };
        let value = |i: usize| {
            let a = s.apply_real(&self.early.fields[i]);
            if w == 0.0 {
                a
            } else {
                (1.0 - w) * a + w * s.apply_real(&self.late.fields[i])
            }
        };
        let dim = self.grid.dim();
        let r = value(0);
        if !(r * r >= self.threshold) {
            return Err(Error::NodeEncounter { point: q.to_vec(), time: t, density: r * r });
        }
        let lr = value(dim + 1);
        let mut f = [0.0; 3];
        for k in 0..dim {
            let grad_r = value(1 + k);
            let grad_lr = value(dim + 2 + k);
            f[k] = grad_lr / r - lr * grad_r / (r * r);
        }
        Ok(f)
    }
}

fn threshold_for(series: &FrameSeries) -> Result<f64> {
    Ok(NodePolicy::default().threshold(series.grid(), series.frame(0)?.norm_sqr()))
}

/// Quantum force `−∇U` at `(t, q)`.
pub fn quantum_force(series: &FrameSeries, t: f64, q: &[f64]) -> Result<Vec<f64>> {
    let (i, _) = series.bracket(t)?;
    let ops = FieldOps::new(series.grid().clone());
    let early = ForceFrame::new(&*series.frame(i)?, &ops);
    let late = if series.len() > 1 { ForceFrame::new(&*series.frame(i + 1)?, &ops) } else { early.clone() };
    let pair = ForcePair { early: &early, late: &late, grid: series.grid(), threshold: threshold_for(series)? };
    Ok(pair.force(t, q)?[..series.grid().dim()].to_vec())
}

/// `∂S/∂t + Σ (∂_k S)²/2m_k + V + U` at interior frame time `t`, NaN off the
/// mask. The time derivative is the central difference of the unwrapped
/// phase, evaluated pointwise as `ℏ·arg(ψ_{i+1}·ψ*_{i−1}) / 2Δt`.
pub fn hj_residual(series: &FrameSeries, t: f64) -> Result<Vec<f64>> {
    let i = series
        .frame_index(t)
        .ok_or_else(|| Error::Checkpoint(format!("{t} is not a frame time")))?;
    if i == 0 || i + 1 >= series.len() {
        return Err(Error::Checkpoint(format!("{t} is not an interior frame time")));
    }
    let before = series.frame(i - 1)?;
    let now = series.frame(i)?;
    let after = series.frame(i + 1)?;
    let polar = polar_decompose(&now)?;
    for other in [&before, &after] {
        let p = polar_decompose(other)?;
        if p.components != polar.components {
            return Err(Error::Unwrap(format!(
                "unwrapping components differ between adjacent frames ({} vs {})",
                p.components, polar.components
            )));
        }
    }
    let params = series.params();
    let hbar = params.hbar;
    let dt = series.times()[i + 1] - series.times()[i - 1];
    let ops = FieldOps::new(series.grid().clone());
    let grad = ops.gradient_split(now.amplitudes());
    let v = series.potential_at(i).values();
    let psi = now.amplitudes();
    let mut out = vec![f64::NAN; psi.len()];
    for j in 0..psi.len() {
        if !polar.mask[j] {
            continue;
        }
        let ds_dt = hbar * (after.amplitudes()[j] * before.amplitudes()[j].conj()).arg() / dt;
        let kinetic: f64 = (0..grad.len())
            .map(|k| {
                let ds = hbar * (grad[k][j] / psi[j]).im;
                ds * ds / (2.0 * params.masses[k])
            })
            .sum();
        out[j] = ds_dt + kinetic + v[j] + polar.u[j];
    }
    Ok(out)
}

/// Path recorded at the frame times of the series it was integrated on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordedPath {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl RecordedPath {
    pub fn max_deviation(&self, other: &[Vec<f64>]) -> f64 {
        self.positions
            .iter()
            .zip(other)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Cubic interpolation of the classical force `−∇V`.
struct ClassicalForce {
    grad: Vec<Vec<f64>>,
}

impl ClassicalForce {
    fn new(potential: &Potential) -> Self {
        Self { grad: potential.gradient() }
    }

    fn at(&self, grid: &Grid, q: &[f64]) -> Result<[f64; 3]> {
        let s = Stencil::new(grid, q)?;
        let mut f = [0.0; 3];
        for (k, g) in self.grad.iter().enumerate() {
            f[k] = -s.apply_real(g);
        }
        Ok(f)
    }
}

type State = ([f64; 3], [f64; 3]);

fn rk4_second_order(
    state: &State,
    t: f64,
    h: f64,
    dim: usize,
    accel: &dyn Fn(f64, &[f64; 3]) -> Result<[f64; 3]>,
) -> Result<State> {
    let (q, v) = state;
    let shift = |base: &[f64; 3], d: &[f64; 3], s: f64| {
        let mut o = *base;
        for k in 0..dim {
            o[k] += s * d[k];
        }
        o
    };
    let a1 = accel(t, q)?;
    let (q2, v2) = (shift(q, v, 0.5 * h), shift(v, &a1, 0.5 * h));
    let a2 = accel(t + 0.5 * h, &q2)?;
    let (q3, v3) = (shift(q, &v2, 0.5 * h), shift(v, &a2, 0.5 * h));
    let a3 = accel(t + 0.5 * h, &q3)?;
    let (q4, v4) = (shift(q, &v3, h), shift(v, &a3, h));
    let a4 = accel(t + h, &q4)?;
    let mut nq = *q;
    let mut nv = *v;
    for k in 0..dim {
        nq[k] += h / 6.0 * (v[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
        nv[k] += h / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
    }
    Ok((nq, nv))
}

/// Integrate `m·Q̈ = −∇(V + U)` from `q0` with initial velocity `v0`, which
/// defaults to the guiding velocity `v^ψ(q0)`.
pub fn second_order_trajectory(
    series: &FrameSeries,
    q0: &[f64],
    v0: Option<&[f64]>,
    base_dt: f64,
) -> Result<RecordedPath> {
    let grid = series.grid().clone();
    let dim = grid.dim();
    let params = series.params().clone();
    let v_init = match v0 {
        Some(v) => v.to_vec(),
        None => velocity_at(series, series.start(), q0, &NodePolicy::default())?,
    };
    let mut q = [0.0; 3];
    let mut v = [0.0; 3];
    q[..dim].copy_from_slice(q0);
    v[..dim].copy_from_slice(&v_init);
    let mut out = RecordedPath { times: series.times().to_vec(), positions: vec![q0.to_vec()], velocities: vec![v_init] };
    let ops = FieldOps::new(grid.clone());
    let threshold = threshold_for(series)?;
    let mut early = ForceFrame::new(&*series.frame(0)?, &ops);
    for i in 0..series.len().saturating_sub(1) {
        let late = ForceFrame::new(&*series.frame(i + 1)?, &ops);
        let pair = ForcePair { early: &early, late: &late, grid: &grid, threshold };
        let classical = ClassicalForce::new(series.potential_at(i));
        let accel = |t: f64, p: &[f64; 3]| -> Result<[f64; 3]> {
            let mut p = *p;
            if grid.is_periodic() {
                grid.wrap(&mut p[..dim]);
            }
            let fq = pair.force(t, &p[..dim])?;
            let fc = classical.at(&grid, &p[..dim])?;
            let mut a = [0.0; 3];
            for k in 0..dim {
                a[k] = (fq[k] + fc[k]) / params.masses[k];
            }
            Ok(a)
        };
        let (t0, t1) = (series.times()[i], series.times()[i + 1]);
        let n = ((t1 - t0) / base_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        for j in 0..n {
            (q, v) = rk4_second_order(&(q, v), t0 + j as f64 * h, h, dim, &accel)?;
        }
        out.positions.push(q[..dim].to_vec());
        out.velocities.push(v[..dim].to_vec());
        early = late;
    }
    Ok(out)
}

/// Newtonian path under `−∇V`, recorded every `dt` (with momenta).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalPath {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
}

impl ClassicalPath {
    /// `Σ p²/2m + V(q)` at each recorded time, with V interpolated.
    pub fn energies(&self, potential: &Potential, params: &PhysicalParams) -> Result<Vec<f64>> {
        let grid = potential.grid();
        self.positions
            .iter()
            .zip(&self.momenta)
            .map(|(q, p)| {
                let kinetic: f64 = p.iter().zip(&params.masses).map(|(p, m)| p * p / (2.0 * m)).sum();
                Ok(kinetic + Stencil::new(grid, q)?.apply_real(potential.values()))
            })
            .collect()
    }
}

pub fn classical_trajectory(
    potential: &Potential,
    q0: &[f64],
    p0: &[f64],
    params: &PhysicalParams,
    total_time: f64,
    dt: f64,
) -> Result<ClassicalPath> {
    let grid = potential.grid().clone();
    let dim = grid.dim();
    if !(dt > 0.0 && total_time >= 0.0) {
        return Err(Error::Params("classical integration needs dt > 0 and total_time >= 0".into()));
    }
    let force = ClassicalForce::new(potential);
    let accel = |_t: f64, q: &[f64; 3]| -> Result<[f64; 3]> {
        let f = force.at(&grid, &q[..dim])?;
        let mut a = [0.0; 3];
        for k in 0..dim {
            a[k] = f[k] / params.masses[k];
        }
        Ok(a)
    };
    let steps = (total_time / dt).round() as usize;
    let mut q = [0.0; 3];
    let mut v = [0.0; 3];
    q[..dim].copy_from_slice(q0);
    for k in 0..dim {
        v[k] = p0[k] / params.masses[k];
    }
    let momenta = |v: &[f64; 3]| (0..dim).map(|k| v[k] * params.masses[k]).collect::<Vec<_>>();
    let mut out = ClassicalPath { times: vec![0.0], positions: vec![q0.to_vec()], momenta: vec![momenta(&v)] };
    for s in 0..steps {
        (q, v) = rk4_second_order(&(q, v), s as f64 * dt, dt, dim, &accel)?;
        if !grid.contains(&q[..dim]) {
            return Err(Error::OutsideGrid { point: q[..dim].to_vec() });
        }
        out.times.push((s + 1) as f64 * dt);
        out.positions.push(q[..dim].to_vec());
        out.momenta.push(momenta(&v));
    }
    Ok(out)
}

/// Packet, potential and mass ladder for a classical-limit comparison.
/// At scale factor `s` the masses and the potential are multiplied by `s`,
/// so the Newtonian path from the packet centre with velocity `velocity` is
/// the same on every rung while `ℏ` becomes relatively smaller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLimitSpec {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub potential: PotentialKind,
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Initial group velocity; the packet wave number is `m·velocity/ℏ`.
    pub velocity: Vec<f64>,
    pub propagator: PropagatorSpec,
    pub base_dt: f64,
    pub scale_factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalLimitRow {
    pub scale: f64,
    pub masses: Vec<f64>,
    /// Largest distance between the Bohmian and Newtonian paths at frame times.
    pub max_deviation: f64,
    /// Largest |quantum force| / |classical force| along the Bohmian path;
    /// `None` when the classical force vanishes everywhere on the path.
    pub max_force_ratio: Option<f64>,
    pub max_quantum_force: f64,
    pub bohmian_final: Vec<f64>,
    pub classical_final: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalLimitTable {
    pub rows: Vec<ClassicalLimitRow>,
}

impl ClassicalLimitTable {
    /// True when the deviation decreases strictly along the ladder.
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].max_deviation < w[0].max_deviation)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["scale", "mass", "max_deviation", "max_force_ratio", "max_quantum_force"])?;
        for r in &self.rows {
            w.write_record([
                format!("{}", r.scale),
                format!("{}", r.masses[0]),
                format!("{}", r.max_deviation),
                r.max_force_ratio.map(|x| format!("{x}")).unwrap_or_else(|| "nan".into()),
                format!("{}", r.max_quantum_force),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run the ladder: evolve each rung, follow the Bohmian path from the packet
/// centre and the Newtonian path with matching initial data.
pub fn classical_limit_study(spec: &ClassicalLimitSpec) -> Result<ClassicalLimitTable> {
    let grid = Arc::new(Grid::new(spec.grid.clone())?);
    let dim = grid.dim();
    let mut rows = Vec::with_capacity(spec.scale_factors.len());
    for &s in &spec.scale_factors {
        let params = spec.params.scale_masses(s);
        let k: Vec<f64> = (0..dim).map(|i| params.masses[i] * spec.velocity[i] / params.hbar).collect();
        let psi = GaussianPacket::new(spec.center.clone(), spec.sigma.clone(), k).build(grid.clone(), params.clone())?;
        let potential = Potential::new(spec.potential.scaled(s), grid.clone(), &params)?;
        let series = evolve(&psi, &potential, &spec.propagator)?;
        let ens = EnsembleSpec::new(1, 0, spec.base_dt.min(series.frame_interval()));
        let path = integrate_trajectory(&series, &spec.center, &ens)?;
        if path.status != PathStatus::Ok {
            return Err(Error::Experiment(format!("bohmian path from the packet centre ended with {}", path.status.as_str())));
        }
        let frame_dt = series.frame_interval();
        let sub = (frame_dt / spec.base_dt).ceil().max(1.0) as usize;
        let p0: Vec<f64> = (0..dim).map(|i| params.masses[i] * spec.velocity[i]).collect();
        let classical = classical_trajectory(&potential, &spec.center, &p0, &params, series.end() - series.start(), frame_dt / sub as f64)?;
        let mut max_dev = 0.0f64;
        let mut max_ratio: Option<f64> = None;
        let mut max_fq = 0.0f64;
        let cforce = ClassicalForce::new(&potential);
        let ops = FieldOps::new(grid.clone());
        let threshold = threshold_for(&series)?;
        for i in 0..series.len() {
            let qb = path.unwrapped(i, &grid);
            let qc = &classical.positions[i * sub];
            max_dev = max_dev.max(qb.iter().zip(qc).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
            let frame = ForceFrame::new(&*series.frame(i)?, &ops);
            let pair = ForcePair { early: &frame, late: &frame, grid: &grid, threshold };
            let fq = pair.force(series.times()[i], path.position(i))?;
            let fc = cforce.at(&grid, path.position(i))?;
            let nq = fq[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            let nc = fc[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            max_fq = max_fq.max(nq);
            if nc > 1e-12 {
                max_ratio = Some(max_ratio.unwrap_or(0.0).max(nq / nc));
            }
        }
        rows.push(ClassicalLimitRow {
            scale: s,
            masses: params.masses.clone(),
            max_deviation: max_dev,
            max_force_ratio: max_ratio,
            max_quantum_force: max_fq,
            bohmian_final: path.unwrapped(series.len() - 1, &grid),
            classical_final: classical.positions[(series.len() - 1) * sub].clone(),
        });
    }
    Ok(ClassicalLimitTable { rows })
}
