//! Quantum-equilibrium sampling, trajectory integration of the guiding
//! equation, and equivariance statistics.
//!
//! Random streams: draw `i` of `sample_equilibrium(.., master_seed)` uses
//! `ChaCha8Rng::seed_from_u64(master_seed)` switched to stream `i`, so every
//! draw is reproducible independently of scheduling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldio::write_doubles;
use crate::grid::Grid;
use crate::guidance::{GuidingFrame, GuidingPair, NodePolicy};
use crate::propagator::FrameSeries;
use crate::spectral::FieldOps;
use crate::stats::{chi_square, ks_critical_99, ks_pvalue, ks_statistic, CellMarginal};
use crate::state::WaveFunction;

/// Lowest rejection-sampling acceptance rate before sampling is refused.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Smallest ok-sample size for equivariance statistics.
pub const MIN_SAMPLES: usize = 100;
/// χ² p-value below which a checkpoint is flagged.
pub const CHI2_ALPHA: f64 = 1e-3;
/// Target number of χ² bins per axis.
const CHI2_BINS_PER_AXIS: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_trajectories: usize,
    /// Defaults to the scenario seed when read from a config.
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub integrator: Integrator,
    pub base_dt: f64,
    #[serde(default = "default_shrink")]
    pub node_retry_shrink: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub node_policy: NodePolicy,
}

fn default_shrink() -> f64 {
    0.25
}

fn default_retries() -> u32 {
    4
}

impl EnsembleSpec {
    pub fn new(n_trajectories: usize, master_seed: u64, base_dt: f64) -> Self {
        Self {
            n_trajectories,
            master_seed,
            integrator: Integrator::Rk4,
            base_dt,
            node_retry_shrink: default_shrink(),
            max_retries: default_retries(),
            node_policy: NodePolicy::default(),
        }
    }

    /// Problems with the spec, given the frame spacing it will integrate over.
    pub fn violations(&self, frame_interval: Option<f64>) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_trajectories == 0 {
            out.push("ensemble.n_trajectories must be at least 1".into());
        }
        if !(self.base_dt > 0.0) {
            out.push("ensemble.base_dt must be positive".into());
        }
        if let Some(h) = frame_interval {
            if self.base_dt > h * (1.0 + 1e-9) {
                out.push(format!("ensemble.base_dt {} exceeds the frame spacing {h}", self.base_dt));
            }
        }
        if !(self.node_retry_shrink > 0.0 && self.node_retry_shrink < 1.0) {
            out.push("ensemble.node_retry_shrink must lie in (0, 1)".into());
        }
        out.extend(self.node_policy.violations().into_iter().map(|v| format!("ensemble.node_policy: {v}")));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Ok,
    NodeAbort,
    BoundaryExit,
}

impl PathStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PathStatus::Ok => "ok",
            PathStatus::NodeAbort => "node_abort",
            PathStatus::BoundaryExit => "boundary_exit",
        }
    }
}

/// One integrated path, recorded at every frame time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    /// Positions inside the grid, `frames × dim`; NaN after an abort.
    positions: Vec<f64>,
    /// Periodic images crossed so far, `frames × dim`.
    windings: Vec<i32>,
    pub status: PathStatus,
    pub seed: u64,
    /// Time at which integration stopped, for aborted paths.
    pub stopped_at: Option<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Position at frame `i`, inside the grid.
    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Position at frame `i` with periodic wraps undone.
    pub fn unwrapped(&self, i: usize, grid: &Grid) -> Vec<f64> {
        (0..self.dim)
            .map(|k| self.positions[i * self.dim + k] + self.windings[i * self.dim + k] as f64 * grid.extent(k))
            .collect()
    }

    /// Total number of boundary wraps along the path.
    pub fn wrap_count(&self) -> u32 {
        let frames = self.len();
        if frames == 0 {
            return 0;
        }
        (1..frames)
            .flat_map(|i| (0..self.dim).map(move |k| (i, k)))
            .map(|(i, k)| (self.windings[i * self.dim + k] - self.windings[(i - 1) * self.dim + k]).unsigned_abs())
            .sum()
    }

    pub fn final_position(&self) -> &[f64] {
        self.position(self.len() - 1)
    }
}

/// Paths of an ensemble aligned with the frame times of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub dim: usize,
    pub times: Vec<f64>,
    pub paths: Vec<Trajectory>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub ok: usize,
    pub node_abort: usize,
    pub boundary_exit: usize,
}

impl TrajectorySet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn status_counts(&self) -> StatusCounts {
        let mut c = StatusCounts::default();
        for p in &self.paths {
            match p.status {
                PathStatus::Ok => c.ok += 1,
                PathStatus::NodeAbort => c.node_abort += 1,
                PathStatus::BoundaryExit => c.boundary_exit += 1,
            }
        }
        c
    }

    pub fn ok_paths(&self) -> impl Iterator<Item = &Trajectory> {
        self.paths.iter().filter(|p| p.status == PathStatus::Ok)
    }

    /// CSV with one row per path per selected frame:
    /// `path,time,x0[,x1,x2],status`.
    pub fn write_csv(&self, path: &Path, frames: &[usize]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["path".to_string(), "time".to_string()];
        header.extend((0..self.dim).map(|k| format!("x{k}")));
        header.push("status".into());
        w.write_record(&header)?;
        for (id, p) in self.paths.iter().enumerate() {
            for &i in frames {
                let mut row = vec![id.to_string(), format!("{}", self.times[i])];
                row.extend(p.position(i).iter().map(|x| format!("{x}")));
                row.push(p.status.as_str().into());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Dense paths as `paths.bin` (little-endian f64, path-major, then frame,
    /// then axis; NaN after an abort) plus a `paths.json` header.
    pub fn write_binary(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let values: Vec<f64> = self.paths.iter().flat_map(|p| p.positions.iter().copied()).collect();
        write_doubles(&dir.join("paths.bin"), &values)?;
        let header = serde_json::json!({
            "format": "pilot-wave-paths",
            "version": 1,
            "paths": self.paths.len(),
            "frames": self.times.len(),
            "dim": self.dim,
            "times": self.times,
            "status": self.paths.iter().map(|p| p.status.as_str()).collect::<Vec<_>>(),
            "seeds": self.paths.iter().map(|p| p.seed).collect::<Vec<_>>(),
        });
        let mut f = BufWriter::new(File::create(dir.join("paths.json"))?);
        f.write_all(serde_json::to_string_pretty(&header)?.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Draws from the grid density `|ψ|²`, taken constant on cells centred on
/// the nodes, by rejection against a uniform proposal.
pub fn sample_equilibrium(psi: &WaveFunction, n: usize, master_seed: u64) -> Result<Vec<Vec<f64>>> {
    let grid = psi.grid();
    let density = psi.density();
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let mean = density.iter().sum::<f64>() / density.len() as f64;
    let acceptance = if peak > 0.0 { mean / peak } else { 0.0 };
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::LowAcceptance(acceptance));
    }
    let draw = |i: usize| {
        let mut rng = stream_rng(master_seed, i as u64);
        loop {
            let cell = rng.random_range(0..grid.len());
            if rng.random::<f64>() * peak < density[cell] {
                let mut q: Vec<f64> =
                    (0..grid.dim()).map(|k| grid.coord_of(cell, k) + (rng.random::<f64>() - 0.5) * grid.dx()[k]).collect();
                clamp_into(grid, &mut q);
                return q;
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n).into_par_iter().map(draw).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..n).map(draw).collect())
    }
}

fn clamp_into(grid: &Grid, q: &mut [f64]) {
    if grid.is_periodic() {
        grid.wrap(q);
    } else {
        for (k, x) in q.iter_mut().enumerate() {
            let ax = grid.axis(k);
            *x = x.clamp(ax.lower, ax.upper);
        }
    }
}

/// Per-path integration state.
struct Walker {
    q: [f64; 3],
    winding: [i32; 3],
    t: f64,
}

enum StepFailure {
    Node,
    Exit,
    Other(Error),
}

fn classify(e: Error) -> StepFailure {
    match e {
        Error::NodeEncounter { .. } => StepFailure::Node,
        Error::OutsideGrid { .. } => StepFailure::Exit,
        other => StepFailure::Other(other),
    }
}

/// Stage position inside the grid (wrapped on periodic grids).
fn stage_point(grid: &Grid, q: &[f64; 3], dim: usize) -> [f64; 3] {
    let mut p = *q;
    if grid.is_periodic() {
        grid.wrap(&mut p[..dim]);
    }
    p
}

fn rk4(pair: &GuidingPair, t: f64, q: &[f64; 3], h: f64, dim: usize) -> std::result::Result<[f64; 3], StepFailure> {
    let grid = pair.grid();
    let eval = |t: f64, p: &[f64; 3]| pair.velocity(t, &stage_point(grid, p, dim)[..dim]).map_err(classify);
    let offset = |k: &[f64; 3], s: f64| {
        let mut p = *q;
        for i in 0..dim {
            p[i] += s * k[i];
        }
        p
    };
    let k1 = eval(t, q)?;
    let k2 = eval(t + 0.5 * h, &offset(&k1, 0.5 * h))?;
    let k3 = eval(t + 0.5 * h, &offset(&k2, 0.5 * h))?;
    let k4 = eval(t + h, &offset(&k3, h))?;
    let mut out = *q;
    for i in 0..dim {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// One substep, retried with finer steps on a node encounter.
fn advance(pair: &GuidingPair, spec: &EnsembleSpec, t: f64, q: &[f64; 3], h: f64, dim: usize) -> std::result::Result<[f64; 3], StepFailure> {
    match rk4(pair, t, q, h, dim) {
        Err(StepFailure::Node) => {}
        other => return other,
    }
    let mut shrink = 1.0;
    for _ in 0..spec.max_retries {
        shrink *= spec.node_retry_shrink;
        let m = (1.0 / shrink).ceil() as usize;
        let hs = h / m as f64;
        let mut p = *q;
        let mut ok = true;
        for j in 0..m {
            match rk4(pair, t + j as f64 * hs, &p, hs, dim) {
                Ok(next) => p = next,
                Err(StepFailure::Node) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            return Ok(p);
        }
    }
    Err(StepFailure::Node)
}

fn settle(grid: &Grid, w: &mut Walker, next: [f64; 3], dim: usize) -> bool {
    w.q = next;
    if !grid.is_periodic() {
        return grid.contains(&w.q[..dim]);
    }
    for k in 0..dim {
        let ax = grid.axis(k);
        let shift = ((w.q[k] - ax.lower) / grid.extent(k)).floor();
        if shift != 0.0 {
            w.winding[k] += shift as i32;
            w.q[k] -= shift * grid.extent(k);
            // round-off can leave the point on the upper edge
            if w.q[k] >= ax.upper {
                w.winding[k] += 1;
                w.q[k] = ax.lower;
            } else if w.q[k] < ax.lower {
                w.q[k] = ax.lower;
            }
        }
    }
    true
}

/// Advance one walker across a frame interval.
fn cross_interval(
    pair: &GuidingPair,
    spec: &EnsembleSpec,
    w: &mut Walker,
    t_end: f64,
    dim: usize,
) -> std::result::Result<(), StepFailure> {
    let span = t_end - w.t;
    let substeps = (span / spec.base_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / substeps as f64;
    let t0 = w.t;
    for j in 0..substeps {
        let t = t0 + j as f64 * h;
        let next = advance(pair, spec, t, &w.q, h, dim)?;
        if !settle(pair.grid(), w, next, dim) {
            w.t = t + h;
            return Err(StepFailure::Exit);
        }
    }
    w.t = t_end;
    Ok(())
}

/// Integrate every point through the whole series. Each path's arithmetic
/// depends only on its own start point, so results do not depend on the
/// number of threads.
pub fn integrate_ensemble(series: &FrameSeries, points: &[Vec<f64>], spec: &EnsembleSpec) -> Result<TrajectorySet> {
    integrate_seeded(series, points, &(0..points.len() as u64).collect::<Vec<_>>(), spec)
}

/// As [`integrate_ensemble`], tagging each path with its sampling stream.
pub fn integrate_seeded(series: &FrameSeries, points: &[Vec<f64>], seeds: &[u64], spec: &EnsembleSpec) -> Result<TrajectorySet> {
    let problems = spec.violations((series.len() > 1).then(|| series.frame_interval()));
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let grid = series.grid().clone();
    let dim = grid.dim();
    let frames = series.len();
    let mut walkers = Vec::with_capacity(points.len());
    let mut paths = Vec::with_capacity(points.len());
    for (q0, &seed) in points.iter().zip(seeds) {
        if !grid.contains(q0) {
            return Err(Error::OutsideGrid { point: q0.clone() });
        }
        let mut q = [0.0; 3];
        q[..dim].copy_from_slice(q0);
        walkers.push(Walker { q, winding: [0; 3], t: series.start() });
        let mut positions = vec![f64::NAN; frames * dim];
        positions[..dim].copy_from_slice(q0);
        paths.push(Trajectory {
            dim,
            positions,
            windings: vec![0; frames * dim],
            status: PathStatus::Ok,
            seed,
            stopped_at: None,
        });
    }
    if frames < 2 {
        return Ok(TrajectorySet { dim, times: series.times().to_vec(), paths });
    }
    let ops = FieldOps::new(grid.clone());
    let first = series.frame(0)?;
    let norm_sqr = first.norm_sqr();
    let mut early = GuidingFrame::new(&first, &ops);
    drop(first);
    for i in 0..frames - 1 {
        let late = GuidingFrame::new(&*series.frame(i + 1)?, &ops);
        let pair = GuidingPair::new(&early, &late, series.params(), &spec.node_policy, norm_sqr);
        let t_end = series.times()[i + 1];
        let step = |(w, p): (&mut Walker, &mut Trajectory)| -> Result<()> {
            if p.status != PathStatus::Ok {
                return Ok(());
            }
            match cross_interval(&pair, spec, w, t_end, dim) {
                Ok(()) => {
                    p.positions[(i + 1) * dim..(i + 2) * dim].copy_from_slice(&w.q[..dim]);
                    p.windings[(i + 1) * dim..(i + 2) * dim].copy_from_slice(&w.winding[..dim]);
                    Ok(())
                }
                Err(StepFailure::Node) => {
                    p.status = PathStatus::NodeAbort;
                    p.stopped_at = Some(w.t);
                    Ok(())
                }
                Err(StepFailure::Exit) => {
                    p.status = PathStatus::BoundaryExit;
                    p.stopped_at = Some(w.t);
                    Ok(())
                }
                Err(StepFailure::Other(e)) => Err(e),
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            walkers.par_iter_mut().zip(paths.par_iter_mut()).try_for_each(step)?;
        }
        #[cfg(not(feature = "parallel"))]
        {
            walkers.iter_mut().zip(paths.iter_mut()).try_for_each(step)?;
        }
        early = late;
    }
    Ok(TrajectorySet { dim, times: series.times().to_vec(), paths })
}

/// A single path; identical to the corresponding member of an ensemble.
pub fn integrate_trajectory(series: &FrameSeries, q0: &[f64], spec: &EnsembleSpec) -> Result<Trajectory> {
    let set = integrate_ensemble(series, &[q0.to_vec()], spec)?;
    Ok(set.paths.into_iter().next().expect("one path"))
}

/// Statistics at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointStats {
    pub time: f64,
    pub frame: usize,
    pub sample_size: usize,
    /// Marginal KS statistic per axis.
    pub ks: Vec<f64>,
    pub ks_pvalue: Vec<f64>,
    pub ks_tolerance: f64,
    pub chi2: Option<f64>,
    pub chi2_dof: Option<usize>,
    pub chi2_pvalue: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub checkpoints: Vec<CheckpointStats>,
    pub excluded: StatusCounts,
    pub pass: bool,
}

impl EquivarianceReport {
    pub fn max_ks(&self) -> f64 {
        self.checkpoints.iter().flat_map(|c| c.ks.iter().copied()).fold(0.0, f64::max)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Compare ok positions at each checkpoint with `|ψ_t|²`. A checkpoint
/// passes when every marginal KS statistic is below `tolerance`, which
/// defaults to the 99% KS quantile for the sample size. The χ² statistic on
/// the joint binning is reported alongside.
pub fn equivariance_check(
    tset: &TrajectorySet,
    series: &FrameSeries,
    checkpoints: &[f64],
    tolerance: Option<f64>,
) -> Result<EquivarianceReport> {
    let ok: Vec<&Trajectory> = tset.ok_paths().collect();
    if ok.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { got: ok.len(), need: MIN_SAMPLES });
    }
    let grid = series.grid();
    let counts = tset.status_counts();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let frame = series
            .frame_index(t)
            .ok_or_else(|| Error::Checkpoint(format!("checkpoint {t} is not a frame time")))?;
        let density = series.frame(frame)?.density();
        let n = ok.len();
        let tol = tolerance.unwrap_or_else(|| ks_critical_99(n));
        let mut ks = Vec::with_capacity(grid.dim());
        let mut ks_p = Vec::with_capacity(grid.dim());
        for k in 0..grid.dim() {
            let marginal = CellMarginal::new(grid, &density, k);
            let xs: Vec<f64> = ok.iter().map(|p| p.position(frame)[k]).collect();
            let d = ks_statistic(&xs, |x| marginal.cdf(x));
            ks.push(d);
            ks_p.push(ks_pvalue(d, n));
        }
        let chi = joint_chi_square(grid, &density, ok.iter().map(|p| p.position(frame)));
        let pass = ks.iter().all(|d| *d < tol);
        out.push(CheckpointStats {
            time: t,
            frame,
            sample_size: n,
            ks,
            ks_pvalue: ks_p,
            ks_tolerance: tol,
            chi2: chi.map(|c| c.statistic),
            chi2_dof: chi.map(|c| c.dof),
            chi2_pvalue: chi.map(|c| c.pvalue),
            pass,
        });
    }
    let pass = out.iter().all(|c| c.pass);
    Ok(EquivarianceReport {
        checkpoints: out,
        excluded: StatusCounts { ok: 0, ..counts },
        pass,
    })
}

/// χ² on blocks of cells, up to [`CHI2_BINS_PER_AXIS`] blocks per axis.
fn joint_chi_square<'a>(
    grid: &Grid,
    density: &[f64],
    points: impl Iterator<Item = &'a [f64]>,
) -> Option<crate::stats::ChiSquare> {
    let dim = grid.dim();
    let block: Vec<usize> = (0..dim).map(|k| (grid.points(k) / CHI2_BINS_PER_AXIS).max(1)).collect();
    let bins_per: Vec<usize> = (0..dim).map(|k| grid.points(k).div_ceil(block[k])).collect();
    let total_bins: usize = bins_per.iter().product();
    let bin_of_index = |idx: &[usize]| idx.iter().zip(&block).zip(&bins_per).fold(0, |acc, ((i, b), nb)| acc * nb + i / b);
    let mut prob = vec![0.0; total_bins];
    let mut idx = vec![0usize; dim];
    let total: f64 = density.iter().sum();
    for (flat, r) in density.iter().enumerate() {
        grid.unflatten(flat, &mut idx);
        prob[bin_of_index(&idx)] += r / total;
    }
    let mut observed = vec![0u64; total_bins];
    for q in points {
        for k in 0..dim {
            let n = grid.points(k);
            let s = ((q[k] - grid.axis(k).lower) / grid.dx()[k]).round() as isize;
            idx[k] = if grid.is_periodic() { s.rem_euclid(n as isize) as usize } else { s.clamp(0, n as isize - 1) as usize };
        }
        observed[bin_of_index(&idx)] += 1;
    }
    chi_square(&observed, &prob)
}

/// True iff all ok paths keep their ordering at every frame (1D only).
pub fn non_crossing_check(tset: &TrajectorySet, grid: &Grid) -> Result<bool> {
    if tset.dim != 1 {
        return Err(Error::ShapeMismatch("non-crossing check is defined for one-dimensional runs".into()));
    }
    let ok: Vec<&Trajectory> = tset.ok_paths().collect();
    if ok.len() < 2 {
        return Ok(true);
    }
    let mut order: Vec<usize> = (0..ok.len()).collect();
    let x = |p: usize, i: usize| ok[p].unwrapped(i, grid)[0];
    order.sort_by(|&a, &b| x(a, 0).total_cmp(&x(b, 0)));
    for i in 1..tset.times.len() {
        if order.windows(2).any(|w| x(w[0], i) > x(w[1], i)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Swap the recorded positions of two paths from frame `from` on. Used to
/// construct ordering violations in diagnostics tests.
pub fn swap_path_tails(tset: &mut TrajectorySet, a: usize, b: usize, from: usize) {
    let dim = tset.dim;
    let (lo, hi) = (a.min(b), a.max(b));
    let (left, right) = tset.paths.split_at_mut(hi);
    let (pa, pb) = (&mut left[lo], &mut right[0]);
    pa.positions[from * dim..].swap_with_slice(&mut pb.positions[from * dim..]);
    pa.windings[from * dim..].swap_with_slice(&mut pb.windings[from * dim..]);
}
