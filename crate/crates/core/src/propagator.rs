//! Time evolution of wave functions and stored frame series.
//!
//! Two schemes: Strang-split spectral stepping on periodic grids, and
//! Crank–Nicolson on one-dimensional grids with homogeneous Dirichlet walls.

use std::borrow::Cow;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldio::{self, FieldKind, FieldManifest, FieldWriter};
use crate::grid::{Boundary, Grid};
use crate::potential::Potential;
use crate::spectral::FieldOps;
use crate::state::{PhysicalParams, WaveFunction};

/// Probability allowed in the boundary strip before evolution aborts.
pub const BOUNDARY_CONTAMINATION_LIMIT: f64 = 1e-6;

/// Largest phase-insensitive L² change tolerated between stored frames.
pub const FRAME_CHANGE_LIMIT: f64 = 0.1;

pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    SplitStepSpectral,
    #[serde(rename = "crank-nicolson-1d")]
    CrankNicolson1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSpec {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub total_time: f64,
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    /// Bytes of frames kept in memory before spilling to disk.
    #[serde(default = "default_budget")]
    pub memory_budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spill_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_stride() -> usize {
    10
}

fn default_budget() -> usize {
    DEFAULT_MEMORY_BUDGET
}

impl PropagatorSpec {
    pub fn new(method: Method, dt: f64, total_time: f64, frame_stride: usize) -> Self {
        Self { method, dt, total_time, frame_stride, memory_budget: DEFAULT_MEMORY_BUDGET, spill_dir: None }
    }

    pub fn split_step(dt: f64, total_time: f64, frame_stride: usize) -> Self {
        Self::new(Method::SplitStepSpectral, dt, total_time, frame_stride)
    }

    pub fn violations(&self, grid: Option<&Grid>) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.total_time >= self.dt) {
            out.push(format!("total_time {} shorter than dt {}", self.total_time, self.dt));
        }
        if self.frame_stride == 0 {
            out.push("frame_stride must be at least 1".into());
        }
        if let Some(g) = grid {
            match self.method {
                Method::CrankNicolson1d if g.dim() != 1 || g.boundary() != Boundary::Dirichlet => {
                    out.push("crank-nicolson-1d needs a one-dimensional Dirichlet grid".into())
                }
                Method::SplitStepSpectral if !g.is_periodic() => {
                    out.push("split-step-spectral needs a periodic grid".into())
                }
                _ => {}
            }
        }
        out
    }

    pub fn frame_interval(&self) -> f64 {
        self.dt * self.frame_stride as f64
    }

    /// `floor(total_time / (dt·stride)) + 1`.
    pub fn frame_count(&self) -> usize {
        (self.total_time / self.frame_interval() + 1e-9).floor() as usize + 1
    }
}

/// Reusable Strang-split stepper: half potential kick, exact kinetic drift in
/// Fourier space, half potential kick.
pub struct SplitStepper {
    ops: FieldOps,
    half_kick: Vec<C64>,
    drift: Vec<C64>,
}

impl SplitStepper {
    pub fn new(grid: Arc<Grid>, params: &PhysicalParams, potential: &Potential, dt: f64) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::Propagator("split-step stepping needs a periodic grid".into()));
        }
        if **potential.grid() != *grid {
            return Err(Error::ShapeMismatch("potential and state grids differ".into()));
        }
        params.check_for(&grid)?;
        let guard = dt * potential.max_abs() / params.hbar;
        if guard >= PI {
            return Err(Error::PhaseWrap(guard));
        }
        let half_kick = potential.values().iter().map(|v| C64::from_polar(1.0, -v * dt / (2.0 * params.hbar))).collect();
        let dim = grid.dim();
        let drift = (0..grid.len())
            .map(|flat| {
                let mut e = 0.0;
                for k in 0..dim {
                    let i = (flat / grid.strides()[k]) % grid.points(k);
                    let kk = grid.wavenumbers(k)[i];
                    e += params.hbar * kk * kk / (2.0 * params.masses[k]);
                }
                C64::from_polar(1.0, -e * dt)
            })
            .collect();
        Ok(Self { ops: FieldOps::new(grid), half_kick, drift })
    }

    pub fn step(&self, amps: &mut [C64]) {
        amps.iter_mut().zip(&self.half_kick).for_each(|(z, k)| *z *= k);
        self.ops.forward(amps);
        amps.iter_mut().zip(&self.drift).for_each(|(z, d)| *z *= d);
        self.ops.inverse(amps);
        amps.iter_mut().zip(&self.half_kick).for_each(|(z, k)| *z *= k);
    }
}

/// One split-step of length `dt`.
pub fn step_split_spectral(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<WaveFunction> {
    let stepper = SplitStepper::new(psi.grid().clone(), psi.params(), potential, dt)?;
    let mut out = psi.clone().with_time(psi.time() + dt);
    stepper.step(out.amplitudes_mut());
    check_finite(&out)?;
    Ok(out)
}

/// Crank–Nicolson stepper on a 1D Dirichlet grid. Node 0 sits on the lower
/// wall and the upper wall is the ghost node past the end, so the unknowns are
/// nodes `1..N`.
pub struct CrankNicolson {
    lower: C64,
    upper: C64,
    diag_rhs: Vec<C64>,
    // Thomas factorization of the implicit operator
    c_prime: Vec<C64>,
    denom: Vec<C64>,
    diag_lhs: Vec<C64>,
}

/// Relative residual tolerated from the tridiagonal solve.
pub const CN_RESIDUAL_TOL: f64 = 1e-12;

impl CrankNicolson {
    pub fn new(grid: &Grid, params: &PhysicalParams, potential: &Potential, dt: f64) -> Result<Self> {
        if grid.dim() != 1 || grid.boundary() != Boundary::Dirichlet {
            return Err(Error::Propagator("crank-nicolson needs a one-dimensional Dirichlet grid".into()));
        }
        if **potential.grid() != *grid {
            return Err(Error::ShapeMismatch("potential and state grids differ".into()));
        }
        params.check_for(grid)?;
        let h = grid.dx()[0];
        let a = params.hbar * params.hbar / (2.0 * params.masses[0] * h * h);
        let factor = C64::new(0.0, dt / (2.0 * params.hbar));
        let v = &potential.values()[1..];
        let off = -factor * a;
        let diag_lhs: Vec<C64> = v.iter().map(|vj| 1.0 + factor * (2.0 * a + vj)).collect();
        let diag_rhs: Vec<C64> = v.iter().map(|vj| 1.0 - factor * (2.0 * a + vj)).collect();
        let m = diag_lhs.len();
        let mut c_prime = vec![C64::default(); m];
        let mut denom = vec![C64::default(); m];
        denom[0] = diag_lhs[0];
        c_prime[0] = off / denom[0];
        for j in 1..m {
            denom[j] = diag_lhs[j] - off * c_prime[j - 1];
            c_prime[j] = off / denom[j];
        }
        Ok(Self { lower: off, upper: -off, diag_rhs, c_prime, denom, diag_lhs })
    }

    /// Advance in place; returns the relative residual of the linear solve.
    pub fn step(&self, amps: &mut [C64]) -> Result<f64> {
        let x = &mut amps[1..];
        let m = x.len();
        let off_rhs = self.upper;
        let rhs: Vec<C64> = (0..m)
            .map(|j| {
                let mut r = self.diag_rhs[j] * x[j];
                if j > 0 {
                    r += off_rhs * x[j - 1];
                }
                if j + 1 < m {
                    r += off_rhs * x[j + 1];
                }
                r
            })
            .collect();
        let off = self.lower;
        let mut d = vec![C64::default(); m];
        d[0] = rhs[0] / self.denom[0];
        for j in 1..m {
            d[j] = (rhs[j] - off * d[j - 1]) / self.denom[j];
        }
        x[m - 1] = d[m - 1];
        for j in (0..m - 1).rev() {
            x[j] = d[j] - self.c_prime[j] * x[j + 1];
        }
        let scale = rhs.iter().fold(0.0f64, |s, r| s.max(r.norm())).max(f64::MIN_POSITIVE);
        let residual = (0..m)
            .map(|j| {
                let mut r = self.diag_lhs[j] * x[j] - rhs[j];
                if j > 0 {
                    r += off * x[j - 1];
                }
                if j + 1 < m {
                    r += off * x[j + 1];
                }
                r.norm()
            })
            .fold(0.0, f64::max)
            / scale;
        amps[0] = C64::default();
        if !(residual < CN_RESIDUAL_TOL) {
            return Err(Error::LinearSolve(residual));
        }
        Ok(residual)
    }
}

/// Lowest eigenstate of the Crank–Nicolson grid Hamiltonian (1D Dirichlet)
/// by shifted inverse iteration from `guess`, with its eigenvalue. Under
/// Crank–Nicolson evolution this state only acquires a global phase.
pub fn discrete_ground_state(guess: &WaveFunction, potential: &Potential) -> Result<(WaveFunction, f64)> {
    let grid = guess.grid();
    if grid.dim() != 1 || grid.boundary() != Boundary::Dirichlet {
        return Err(Error::Propagator("discrete ground states need a one-dimensional Dirichlet grid".into()));
    }
    let p = guess.params();
    let h = grid.dx()[0];
    let a = p.hbar * p.hbar / (2.0 * p.masses[0] * h * h);
    let v = &potential.values()[1..];
    let diag: Vec<f64> = v.iter().map(|vj| 2.0 * a + vj).collect();
    let m = diag.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|j| {
                let mut r = diag[j] * x[j];
                if j > 0 {
                    r -= a * x[j - 1];
                }
                if j + 1 < m {
                    r -= a * x[j + 1];
                }
                r
            })
            .collect()
    };
    let normalize = |x: &mut Vec<f64>| {
        let n = x.iter().map(|y| y * y).sum::<f64>().sqrt();
        x.iter_mut().for_each(|y| *y /= n);
    };
    let mut x: Vec<f64> = guess.amplitudes()[1..].iter().map(|z| z.norm()).collect();
    normalize(&mut x);
    let rayleigh = |x: &[f64]| x.iter().zip(apply(x)).map(|(a, b)| a * b).sum::<f64>();
    let mut energy = rayleigh(&x);
    // shift just below the estimate; Rayleigh quotients bound λ0 from above
    let shift = energy - 1e-3 * (1.0 + energy.abs());
    for _ in 0..200 {
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut denom = diag[0] - shift;
        c[0] = -a / denom;
        d[0] = x[0] / denom;
        for j in 1..m {
            denom = diag[j] - shift + a * c[j - 1];
            c[j] = -a / denom;
            d[j] = (x[j] + a * d[j - 1]) / denom;
        }
        let mut y = vec![0.0; m];
        y[m - 1] = d[m - 1];
        for j in (0..m - 1).rev() {
            y[j] = d[j] - c[j] * y[j + 1];
        }
        normalize(&mut y);
        if y.iter().sum::<f64>() < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        x = y;
        energy = rayleigh(&x);
        let r = apply(&x).iter().zip(&x).map(|(hx, xj)| (hx - energy * xj).powi(2)).sum::<f64>().sqrt();
        if r < 1e-12 * (1.0 + energy.abs()) {
            break;
        }
    }
    let amps: Vec<C64> = std::iter::once(C64::default()).chain(x.iter().map(|&y| C64::new(y, 0.0))).collect();
    let psi = WaveFunction::new(grid.clone(), p.clone(), amps, guess.time())?;
    Ok((psi, energy))
}

pub fn step_crank_nicolson(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<WaveFunction> {
    let stepper = CrankNicolson::new(psi.grid(), psi.params(), potential, dt)?;
    let mut out = psi.clone().with_time(psi.time() + dt);
    stepper.step(out.amplitudes_mut())?;
    check_finite(&out)?;
    Ok(out)
}

fn check_finite(psi: &WaveFunction) -> Result<()> {
    if psi.amplitudes().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(psi.time()))
    }
}

enum Stepper {
    Split(SplitStepper),
    Crank(CrankNicolson),
}

impl Stepper {
    fn new(grid: &Arc<Grid>, params: &PhysicalParams, potential: &Potential, spec: &PropagatorSpec) -> Result<Self> {
        Ok(match spec.method {
            Method::SplitStepSpectral => Stepper::Split(SplitStepper::new(grid.clone(), params, potential, spec.dt)?),
            Method::CrankNicolson1d => Stepper::Crank(CrankNicolson::new(grid, params, potential, spec.dt)?),
        })
    }

    fn step(&self, amps: &mut [C64]) -> Result<()> {
        match self {
            Stepper::Split(s) => s.step(amps),
            Stepper::Crank(c) => {
                c.step(amps)?;
            }
        }
        Ok(())
    }
}

static SPILL_COUNTER: AtomicUsize = AtomicUsize::new(0);

enum FrameStore {
    Memory(Vec<WaveFunction>),
    Disk { dir: PathBuf, manifest: FieldManifest, owned: bool },
}

/// A segment of a series evolved under one potential.
#[derive(Debug, Clone)]
pub struct Segment {
    pub first_frame: usize,
    pub potential: Arc<Potential>,
}

/// Time-ordered wave-function snapshots, uniformly spaced by `dt·frame_stride`.
pub struct FrameSeries {
    grid: Arc<Grid>,
    params: PhysicalParams,
    times: Vec<f64>,
    spec: PropagatorSpec,
    segments: Vec<Segment>,
    store: FrameStore,
    max_frame_change: f64,
}

impl Drop for FrameSeries {
    fn drop(&mut self) {
        if let FrameStore::Disk { dir, owned: true, .. } = &self.store {
            let _ = std::fs::remove_dir_all(dir);
        }
    }
}

impl std::fmt::Debug for FrameSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameSeries")
            .field("frames", &self.times.len())
            .field("start", &self.times.first())
            .field("end", &self.times.last())
            .field("spilled", &matches!(self.store, FrameStore::Disk { .. }))
            .finish()
    }
}

impl FrameSeries {
    /// Wrap precomputed frames; times must be uniformly spaced by `spec.frame_interval()`.
    pub fn from_frames(frames: Vec<WaveFunction>, potential: Arc<Potential>, spec: PropagatorSpec) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Propagator("empty frame list".into()))?;
        let grid = first.grid().clone();
        let params = first.params().clone();
        let times: Vec<f64> = frames.iter().map(|f| f.time()).collect();
        let step = spec.frame_interval();
        for (i, f) in frames.iter().enumerate() {
            if *f.grid() != grid {
                return Err(Error::ShapeMismatch("frames on different grids".into()));
            }
            let expected = times[0] + i as f64 * step;
            if (f.time() - expected).abs() > 1e-9 * step.max(1.0) {
                return Err(Error::Propagator(format!("frame {i} at t={} breaks uniform spacing", f.time())));
            }
        }
        let max_frame_change = max_change(&frames);
        Ok(Self {
            grid,
            params,
            times,
            spec,
            segments: vec![Segment { first_frame: 0, potential }],
            store: FrameStore::Memory(frames),
            max_frame_change,
        })
    }

    /// Open a series previously written with [`FrameSeries::write_dir`].
    pub fn open_dir(dir: &Path, potential: Arc<Potential>, spec: PropagatorSpec) -> Result<Self> {
        let manifest = fieldio::read_manifest(dir)?;
        if manifest.kind != FieldKind::Complex {
            return Err(Error::Format { path: dir.to_path_buf(), message: "not a complex field series".into() });
        }
        let grid = Arc::new(Grid::new(manifest.grid.clone())?);
        if **potential.grid() != *grid {
            return Err(Error::ShapeMismatch("potential and series grids differ".into()));
        }
        Ok(Self {
            params: manifest.params.clone(),
            times: manifest.times.clone(),
            spec,
            segments: vec![Segment { first_frame: 0, potential }],
            grid,
            store: FrameStore::Disk { dir: dir.to_path_buf(), manifest, owned: false },
            max_frame_change: f64::NAN,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn frame_interval(&self) -> f64 {
        self.spec.frame_interval()
    }

    pub fn is_spilled(&self) -> bool {
        matches!(self.store, FrameStore::Disk { .. })
    }

    /// Largest phase-insensitive L² distance between consecutive frames.
    pub fn max_frame_change(&self) -> f64 {
        self.max_frame_change
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Potential in force on the interval starting at frame `i`.
    pub fn potential_at(&self, i: usize) -> &Arc<Potential> {
        let seg = self.segments.iter().rev().find(|s| s.first_frame <= i).unwrap_or(&self.segments[0]);
        &seg.potential
    }

    pub fn frame(&self, i: usize) -> Result<Cow<'_, WaveFunction>> {
        match &self.store {
            FrameStore::Memory(frames) => Ok(Cow::Borrowed(&frames[i])),
            FrameStore::Disk { dir, manifest, .. } => {
                let amps = fieldio::read_complex_record(dir, manifest, i)?;
                Ok(Cow::Owned(
                    WaveFunction::unnormalized(self.grid.clone(), self.params.clone(), amps, self.times[i])?,
                ))
            }
        }
    }

    /// Index of the frame at time `t` (within rounding), if any.
    pub fn frame_index(&self, t: f64) -> Option<usize> {
        let step = self.frame_interval();
        let s = (t - self.start()) / step;
        let i = s.round();
        ((s - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < self.len()).then_some(i as usize)
    }

    /// Bracketing frame index `i` and weight `w` so that `t = (1−w)·t_i + w·t_{i+1}`.
    pub fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let (start, end) = (self.start(), self.end());
        let slack = 1e-9 * self.frame_interval();
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutsideSpan { time: t, start, end });
        }
        if self.len() == 1 {
            return Ok((0, 0.0));
        }
        let s = ((t - start) / self.frame_interval()).max(0.0);
        let i = (s.floor() as usize).min(self.len() - 2);
        Ok((i, (s - i as f64).clamp(0.0, 1.0)))
    }

    /// Write the series as a field directory.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        self.write_frames(dir, 0..self.len())
    }

    /// Write a subset of frames as a field directory.
    pub fn write_frames(&self, dir: &Path, frames: impl IntoIterator<Item = usize>) -> Result<()> {
        let manifest =
            FieldManifest::new(FieldKind::Complex, vec!["psi".into()], self.grid.spec().clone(), self.params.clone());
        let mut w = FieldWriter::create(dir, manifest)?;
        for i in frames {
            w.push_complex(self.times[i], self.frame(i)?.amplitudes())?;
        }
        w.finish()?;
        Ok(())
    }

    /// Join segments evolved back to back. Each segment after the first must
    /// start from the last frame of its predecessor; that duplicate frame is dropped.
    pub fn concat(parts: Vec<FrameSeries>) -> Result<FrameSeries> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or_else(|| Error::Propagator("no segments to join".into()))?;
        for mut next in iter {
            if next.grid != out.grid || (next.frame_interval() - out.frame_interval()).abs() > 1e-12 {
                return Err(Error::Propagator("segments differ in grid or frame spacing".into()));
            }
            if (next.start() - out.end()).abs() > 1e-9 {
                return Err(Error::Propagator("segments are not contiguous in time".into()));
            }
            let frames_next = match std::mem::replace(&mut next.store, FrameStore::Memory(Vec::new())) {
                FrameStore::Memory(f) => f,
                FrameStore::Disk { .. } => return Err(Error::Propagator("cannot join spilled segments".into())),
            };
            let offset = out.len() - 1;
            match &mut out.store {
                FrameStore::Memory(frames) => frames.extend(frames_next.into_iter().skip(1)),
                FrameStore::Disk { .. } => return Err(Error::Propagator("cannot join spilled segments".into())),
            }
            out.times.extend(next.times.iter().skip(1));
            for s in &next.segments {
                out.segments.push(Segment { first_frame: s.first_frame + offset, potential: s.potential.clone() });
            }
            out.max_frame_change = out.max_frame_change.max(next.max_frame_change);
            out.spec.total_time += next.spec.total_time;
        }
        Ok(out)
    }
}

fn phase_insensitive_change(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let overlap = a.inner(b).map(|z| z.norm()).unwrap_or(0.0) / (a.norm() * b.norm());
    (2.0 - 2.0 * overlap.min(1.0)).max(0.0).sqrt()
}

fn max_change(frames: &[WaveFunction]) -> f64 {
    frames.windows(2).map(|w| phase_insensitive_change(&w[0], &w[1])).fold(0.0, f64::max)
}

/// Evolve `psi0` and store frames at `t0, t0 + dt·stride, …`.
pub fn evolve(psi0: &WaveFunction, potential: &Potential, spec: &PropagatorSpec) -> Result<FrameSeries> {
    evolve_shared(psi0, Arc::new(potential.clone()), spec)
}

pub fn evolve_shared(psi0: &WaveFunction, potential: Arc<Potential>, spec: &PropagatorSpec) -> Result<FrameSeries> {
    let grid = psi0.grid().clone();
    let problems = spec.violations(Some(&grid));
    if !problems.is_empty() {
        return Err(Error::Propagator(problems.join("; ")));
    }
    if **potential.grid() != *grid {
        return Err(Error::ShapeMismatch("potential and initial state grids differ".into()));
    }
    let stepper = Stepper::new(&grid, psi0.params(), &potential, spec)?;
    let count = spec.frame_count();
    let frame_bytes = grid.len() * std::mem::size_of::<C64>();
    let spill = count.saturating_mul(frame_bytes) > spec.memory_budget;
    let strip = grid.is_periodic().then(|| grid.boundary_strip_mask());
    let t0 = psi0.time();

    let mut writer = None;
    let mut spill_dir = None;
    if spill {
        let base = spec.spill_dir.clone().unwrap_or_else(std::env::temp_dir);
        let dir = base.join(format!(
            "pilotwave-spill-{}-{}",
            std::process::id(),
            SPILL_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let manifest =
            FieldManifest::new(FieldKind::Complex, vec!["psi".into()], grid.spec().clone(), psi0.params().clone());
        writer = Some(FieldWriter::create(&dir, manifest)?);
        spill_dir = Some(dir);
    }

    let mut frames = Vec::new();
    let mut current = psi0.clone();
    let mut max_change_seen = 0.0f64;
    let mut previous: Option<WaveFunction> = None;
    for i in 0..count {
        if i > 0 {
            for _ in 0..spec.frame_stride {
                stepper.step(current.amplitudes_mut())?;
            }
            current = current.with_time(t0 + i as f64 * spec.frame_interval());
            check_finite(&current)?;
        }
        if let Some(strip) = &strip {
            let mass = current.boundary_mass_with(strip);
            if mass > BOUNDARY_CONTAMINATION_LIMIT {
                return Err(Error::BoundaryContamination { mass, time: current.time() });
            }
        }
        let prev = if writer.is_some() { previous.as_ref() } else { frames.last() };
        if let Some(prev) = prev {
            max_change_seen = max_change_seen.max(phase_insensitive_change(prev, &current));
        }
        match &mut writer {
            Some(w) => {
                w.push_complex(current.time(), current.amplitudes())?;
                previous = Some(current.clone());
            }
            None => frames.push(current.clone()),
        }
    }
    if max_change_seen > FRAME_CHANGE_LIMIT {
        return Err(Error::Propagator(format!(
            "frame spacing too coarse: consecutive frames differ by {max_change_seen:.3} in L² (limit {FRAME_CHANGE_LIMIT})"
        )));
    }
    let times = (0..count).map(|i| t0 + i as f64 * spec.frame_interval()).collect();
    let store = match (writer, spill_dir) {
        (Some(w), Some(dir)) => {
            w.finish()?;
            let manifest = fieldio::read_manifest(&dir)?;
            FrameStore::Disk { dir, manifest, owned: true }
        }
        _ => FrameStore::Memory(frames),
    };
    Ok(FrameSeries {
        grid,
        params: psi0.params().clone(),
        times,
        spec: spec.clone(),
        segments: vec![Segment { first_frame: 0, potential }],
        store,
        max_frame_change: max_change_seen,
    })
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` with the kinetic term evaluated spectrally.
pub fn energy(psi: &WaveFunction, potential: &Potential) -> Result<f64> {
    let ops = FieldOps::new(psi.grid().clone());
    let weights: Vec<f64> = psi.params().kinetic_weights().iter().map(|w| -w).collect();
    let kinetic = ops.weighted_laplacian(psi.amplitudes(), &weights);
    let num: C64 = psi
        .amplitudes()
        .iter()
        .zip(&kinetic)
        .zip(potential.values())
        .map(|((z, t), v)| z.conj() * (t + z * *v))
        .sum();
    Ok(num.re * psi.grid().cell_volume() / psi.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};
    use crate::potential::PotentialKind;
    use crate::state::{init_gaussian, plane_wave};

    fn grid1(l: f64, n: usize) -> Arc<Grid> {
        Arc::new(make_grid(GridSpec::cube(1, -l, l, n)).unwrap())
    }

    #[test]
    fn plane_wave_acquires_kinetic_phase() {
        let g = Arc::new(make_grid(GridSpec::cube(1, 0.0, 2.0 * PI, 64)).unwrap());
        let p = PhysicalParams::new(1.0, vec![1.0]).unwrap();
        let psi = plane_wave(g.clone(), p, &[5.0]).unwrap();
        let dt = 1e-3;
        let out = step_split_spectral(&psi, &Potential::free(g), dt).unwrap();
        let phase = C64::from_polar(1.0, -25.0 * dt / 2.0);
        let err = psi.amplitudes().iter().zip(out.amplitudes()).map(|(a, b)| (a * phase - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn phase_wrap_guard() {
        let g = grid1(8.0, 64);
        let p = PhysicalParams::natural(1);
        let v = Potential::new(PotentialKind::Tabulated { values: vec![4000.0; 64] }, g.clone(), &p).unwrap();
        let psi = plane_wave(g, p, &[0.0]).unwrap();
        assert!(matches!(step_split_spectral(&psi, &v, 1e-3), Err(Error::PhaseWrap(_))));
    }

    #[test]
    fn frame_count_and_spacing() {
        let spec = PropagatorSpec::split_step(1e-3, 1.0, 100);
        assert_eq!(spec.frame_count(), 11);
        let g = grid1(16.0, 256);
        let p = PhysicalParams::natural(1);
        let psi = init_gaussian(g.clone(), p, &[0.0], &[1.0], &[0.0]).unwrap();
        let series = evolve(&psi, &Potential::free(g), &spec).unwrap();
        assert_eq!(series.len(), 11);
        assert!((series.times()[10] - 1.0).abs() < 1e-12);
        assert_eq!(series.bracket(0.55).unwrap().0, 5);
        assert!(series.bracket(1.5).is_err());
    }

    #[test]
    fn crank_nicolson_preserves_norm_and_eigenstates() {
        let l = 10.0;
        let n = 256;
        let g = Arc::new(make_grid(GridSpec::cube(1, 0.0, l, n).with_boundary(Boundary::Dirichlet)).unwrap());
        let p = PhysicalParams::natural(1);
        // oracle: analytic ground state of the infinite well
        let psi0 = WaveFunction::from_fn(g.clone(), p.clone(), |q| C64::new((PI * q[0] / l).sin(), 0.0)).unwrap();
        let v = Potential::free(g.clone());
        let cn = CrankNicolson::new(&g, &p, &v, 1e-3).unwrap();
        let mut psi = psi0.clone();
        for _ in 0..1000 {
            cn.step(psi.amplitudes_mut()).unwrap();
        }
        let drift = psi0.density().iter().zip(psi.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
        assert!((psi.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn crank_nicolson_rejects_periodic_grids() {
        let g = grid1(8.0, 64);
        let p = PhysicalParams::natural(1);
        let psi = plane_wave(g.clone(), p, &[0.0]).unwrap();
        assert!(step_crank_nicolson(&psi, &Potential::free(g), 1e-3).is_err());
    }

    #[test]
    fn spill_to_disk_matches_memory() {
        let g = grid1(16.0, 256);
        let p = PhysicalParams::natural(1);
        let psi = init_gaussian(g.clone(), p, &[0.0], &[1.0], &[1.0]).unwrap();
        let v = Potential::free(g);
        let spec = PropagatorSpec::split_step(1e-3, 0.2, 20);
        let mem = evolve(&psi, &v, &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut small = spec.clone();
        small.memory_budget = 1024;
        small.spill_dir = Some(dir.path().to_path_buf());
        let disk = evolve(&psi, &v, &small).unwrap();
        assert!(disk.is_spilled() && !mem.is_spilled());
        for i in 0..mem.len() {
            assert_eq!(mem.frame(i).unwrap().amplitudes(), disk.frame(i).unwrap().amplitudes());
        }
    }

    #[test]
    fn boundary_contamination_aborts() {
        let g = grid1(8.0, 128);
        let p = PhysicalParams::natural(1);
        let psi = init_gaussian(g.clone(), p, &[0.0], &[0.5], &[5.0]).unwrap();
        let spec = PropagatorSpec::split_step(1e-3, 2.0, 10);
        assert!(matches!(evolve(&psi, &Potential::free(g), &spec), Err(Error::BoundaryContamination { .. })));
    }

    #[test]
    fn written_series_reopens() {
        let g = grid1(16.0, 128);
        let p = PhysicalParams::natural(1);
        let psi = init_gaussian(g.clone(), p, &[0.0], &[1.0], &[1.0]).unwrap();
        let v = Arc::new(Potential::free(g));
        let spec = PropagatorSpec::split_step(1e-3, 0.1, 50);
        let series = evolve_shared(&psi, v.clone(), &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        series.write_dir(dir.path()).unwrap();
        let back = FrameSeries::open_dir(dir.path(), v, spec).unwrap();
        assert_eq!(back.times(), series.times());
        assert_eq!(back.frame(2).unwrap().amplitudes(), series.frame(2).unwrap().amplitudes());
    }
}
