//! Conditional wave functions and a two-particle pointer experiment:
//! system coordinate on axis 0, pointer coordinate on axis 1.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ensemble::{integrate_seeded, sample_equilibrium, EnsembleSpec, PathStatus, StatusCounts, TrajectorySet};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpec};
use crate::guidance::{GuidingFrame, GuidingPair};
use crate::interp::Stencil;
use crate::potential::{Potential, PotentialKind};
use crate::propagator::{evolve, FrameSeries, PropagatorSpec, SplitStepper};
use crate::spectral::FieldOps;
use crate::state::{GaussianPacket, PhysicalParams, WaveFunction};
use crate::C64;

/// Branches closer than this in `|⟨ψ_α|ψ_β⟩|` are rejected as non-orthogonal.
pub const ORTHOGONALITY_LIMIT: f64 = 1e-8;
/// Required predicted pointer separation, in initial pointer widths.
pub const RESOLUTION_WIDTHS: f64 = 6.0;

/// The x-slice of a two-particle state at a fixed pointer position.
#[derive(Debug, Clone)]
pub struct Conditional {
    pub y: f64,
    /// `Ψ(x, Y)` on the x axis.
    pub slice: WaveFunction,
    /// `∫|Ψ(x, Y)|² dx`.
    pub norm_sqr: f64,
    pub normalized: WaveFunction,
}

/// Evaluates cubic interpolation in y of x-slices of 2D fields.
#[derive(Debug, Clone)]
struct Slicer {
    x_grid: Arc<Grid>,
    y_grid: Grid,
    ny: usize,
}

impl Slicer {
    fn new(grid: &Grid) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::ShapeMismatch("conditioning needs a two-particle (2D) configuration grid".into()));
        }
        let axis = |k: usize| Grid::new(GridSpec::new(vec![grid.axis(k).clone()]).with_boundary(grid.boundary()));
        Ok(Self { x_grid: Arc::new(axis(0)?), y_grid: axis(1)?, ny: grid.points(1) })
    }

    fn slice(&self, field: &[C64], y: f64) -> Result<Vec<C64>> {
        let stencil = Stencil::new(&self.y_grid, &[y])?;
        Ok((0..self.x_grid.len()).map(|i| stencil.apply(&field[i * self.ny..(i + 1) * self.ny])).collect())
    }

    fn norm_sqr(&self, slice: &[C64]) -> f64 {
        slice.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.x_grid.dx()[0]
    }
}

/// `ψ(x) = Ψ(x, Y)`, with `Y` interpolated between pointer nodes.
pub fn conditional_wavefunction(psi: &WaveFunction, y: f64) -> Result<Conditional> {
    let grid = psi.grid();
    let slicer = Slicer::new(grid)?;
    let slice = slicer.slice(psi.amplitudes(), y)?;
    let norm_sqr = slicer.norm_sqr(&slice);
    // the density threshold spread uniformly over the x extent
    let floor = crate::guidance::NodePolicy::default().threshold(grid, psi.norm_sqr()) * grid.extent(0);
    if !(norm_sqr >= floor) || norm_sqr == 0.0 {
        return Err(Error::ConditionalNorm(norm_sqr));
    }
    let params = PhysicalParams { hbar: psi.params().hbar, masses: vec![psi.params().masses[0]] };
    let slice = WaveFunction::unnormalized(slicer.x_grid.clone(), params, slice, psi.time())?;
    let normalized = slice.normalized()?;
    Ok(Conditional { y, slice, norm_sqr, normalized })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    /// `|c_α|²`.
    pub weight: f64,
    #[serde(default)]
    pub phase: f64,
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerSpec {
    #[serde(default)]
    pub center: f64,
    pub sigma: f64,
}

/// One stage of piecewise-constant coupling `V = g·x·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub coupling: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointerExperimentSpec {
    pub grid: GridSpec,
    pub params: PhysicalParams,
    pub branches: Vec<BranchSpec>,
    pub pointer: PointerSpec,
    pub coupling: f64,
    pub interaction_time: f64,
    pub drift_time: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    pub ensemble: EnsembleSpec,
    /// Pointer readings `Z = F(Y)` are the index of the interval between
    /// consecutive boundaries; defaults to the initial pointer centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_boundaries: Option<Vec<f64>>,
    #[serde(default = "default_overlap")]
    pub overlap_threshold: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_stride() -> usize {
    25
}

fn default_overlap() -> f64 {
    1e-6
}

impl PointerExperimentSpec {
    pub fn boundaries(&self) -> Vec<f64> {
        self.region_boundaries.clone().unwrap_or_else(|| vec![self.pointer.center])
    }

    pub fn frame_interval(&self) -> f64 {
        self.dt * self.frame_stride as f64
    }

    /// Interaction then free drift.
    pub fn stages(&self) -> Vec<Stage> {
        vec![
            Stage { coupling: self.coupling, duration: self.interaction_time },
            Stage { coupling: 0.0, duration: self.drift_time },
        ]
    }

    /// Pointer displacement difference between branches `a` and `b` for impulsive
    /// coupling followed by free drift.
    pub fn predicted_separation(&self, a: usize, b: usize) -> f64 {
        let (xa, xb) = (self.branches[a].center, self.branches[b].center);
        let tau = self.interaction_time;
        let my = self.params.masses.get(1).copied().unwrap_or(1.0);
        (self.coupling * (xa - xb)).abs() * (0.5 * tau * tau + tau * self.drift_time) / my
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out: Vec<String> = self.grid.violations();
        if self.grid.axes.len() != 2 {
            out.push("measurement needs a 2D grid (system x, pointer y)".into());
            return out;
        }
        out.extend(self.params.violations(Some(2)));
        let dx: Vec<f64> = self.grid.axes.iter().map(|a| (a.upper - a.lower) / a.points as f64).collect();
        if self.branches.is_empty() {
            out.push("measurement.branches must not be empty".into());
        }
        let total: f64 = self.branches.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            out.push(format!("branch weights sum to {total}, expected 1"));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if !(b.weight > 0.0) {
                out.push(format!("branch {i}: weight must be positive"));
            }
            if !(b.sigma >= 4.0 * dx[0]) {
                out.push(format!("branch {i}: sigma {} below 4 grid spacings ({})", b.sigma, 4.0 * dx[0]));
            }
        }
        if !(self.pointer.sigma >= 4.0 * dx[1]) {
            out.push(format!("pointer sigma {} below 4 grid spacings ({})", self.pointer.sigma, 4.0 * dx[1]));
        }
        if !(self.interaction_time > 0.0) || !(self.drift_time >= 0.0) {
            out.push("interaction_time must be positive and drift_time non-negative".into());
        }
        if !(self.dt > 0.0) || self.frame_stride == 0 {
            out.push("dt must be positive and frame_stride at least 1".into());
        } else {
            let h = self.frame_interval();
            for (name, d) in [("interaction_time", self.interaction_time), ("drift_time", self.drift_time)] {
                if ((d / h).round() - d / h).abs() > 1e-6 {
                    out.push(format!("{name} {d} is not a multiple of the frame spacing {h}"));
                }
            }
        }
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold < 1.0) {
            out.push("overlap_threshold must lie in (0, 1)".into());
        }
        let bounds = self.boundaries();
        if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
            out.push("region_boundaries must be non-empty and strictly increasing".into());
        }
        for a in 0..self.branches.len() {
            for b in a + 1..self.branches.len() {
                let sep = self.predicted_separation(a, b);
                if sep < RESOLUTION_WIDTHS * self.pointer.sigma {
                    out.push(format!(
                        "pointer cannot resolve branches {a} and {b}: predicted separation {sep:.3} < {RESOLUTION_WIDTHS}·sigma"
                    ));
                }
            }
        }
        out.extend(self.ensemble.violations(Some(self.frame_interval())));
        out
    }

    fn check(&self) -> Result<()> {
        let problems = self.violations();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// `c_α·ψ_α(x)·φ₀(y)` for every branch.
    pub fn initial_branches(&self, grid: &Arc<Grid>) -> Result<Vec<WaveFunction>> {
        let y = &self.pointer;
        let packets: Vec<WaveFunction> = self
            .branches
            .iter()
            .map(|b| {
                GaussianPacket::new(vec![b.center, y.center], vec![b.sigma, y.sigma], vec![b.momentum, 0.0])
                    .build(grid.clone(), self.params.clone())
            })
            .collect::<Result<_>>()?;
        for a in 0..packets.len() {
            for b in a + 1..packets.len() {
                let s = packets[a].inner(&packets[b])?.norm();
                if s >= ORTHOGONALITY_LIMIT {
                    return Err(Error::Experiment(format!("branches {a} and {b} overlap: |<a|b>| = {s:.3e}")));
                }
            }
        }
        Ok(packets
            .iter()
            .zip(&self.branches)
            .map(|(p, b)| p.scaled(C64::from_polar(b.weight.sqrt(), b.phase)))
            .collect())
    }
}

/// Evolve through piecewise-constant couplings, one series segment per stage.
pub fn evolve_stages(psi0: &WaveFunction, stages: &[Stage], dt: f64, frame_stride: usize) -> Result<FrameSeries> {
    let grid = psi0.grid().clone();
    let mut parts = Vec::new();
    let mut current = psi0.clone();
    for stage in stages.iter().filter(|s| s.duration > 0.0) {
        let potential = stage_potential(&grid, psi0.params(), stage.coupling)?;
        let part = evolve(&current, &potential, &PropagatorSpec::split_step(dt, stage.duration, frame_stride))?;
        current = part.frame(part.len() - 1)?.into_owned();
        parts.push(part);
    }
    FrameSeries::concat(parts)
}

fn stage_potential(grid: &Arc<Grid>, params: &PhysicalParams, coupling: f64) -> Result<Potential> {
    if coupling == 0.0 {
        Ok(Potential::free(grid.clone()))
    } else {
        Potential::new(PotentialKind::Bilinear { strength: coupling }, grid.clone(), params)
    }
}

/// Branch states advanced in lock-step, one frame interval at a time, so
/// that branch diagnostics never hold more than one frame per branch.
struct BranchStream {
    steppers: Vec<SplitStepper>,
    /// Stage index of every frame interval.
    schedule: Vec<usize>,
    stride: usize,
    states: Vec<WaveFunction>,
    frame: usize,
}

impl BranchStream {
    fn new(initial: &[WaveFunction], stages: &[Stage], dt: f64, stride: usize) -> Result<Self> {
        let grid = initial[0].grid().clone();
        let params = initial[0].params();
        let h = dt * stride as f64;
        let mut steppers = Vec::new();
        let mut schedule = Vec::new();
        for stage in stages.iter().filter(|s| s.duration > 0.0) {
            let potential = stage_potential(&grid, params, stage.coupling)?;
            steppers.push(SplitStepper::new(grid.clone(), params, &potential, dt)?);
            let intervals = (stage.duration / h).round() as usize;
            schedule.extend(std::iter::repeat_n(steppers.len() - 1, intervals));
        }
        Ok(Self { steppers, schedule, stride, states: initial.to_vec(), frame: 0 })
    }

    fn frames(&self) -> usize {
        self.schedule.len() + 1
    }

    /// Advance to the next frame; false once the last frame is reached.
    fn advance(&mut self) -> bool {
        let Some(&stage) = self.schedule.get(self.frame) else { return false };
        let stepper = &self.steppers[stage];
        for psi in &mut self.states {
            for _ in 0..self.stride {
                stepper.step(psi.amplitudes_mut());
            }
        }
        self.frame += 1;
        true
    }
}

fn region_of(bounds: &[f64], y: f64) -> usize {
    bounds.iter().filter(|b| y >= **b).count()
}

/// Pointer-support bookkeeping of the branch series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSupports {
    /// Pointer region read by each branch.
    pub regions: Vec<usize>,
    /// Mean pointer position per frame, per branch.
    pub mean_y: Vec<Vec<f64>>,
    /// Per frame: the largest branch mass lying in other branches' regions.
    pub overlap: Vec<f64>,
    /// Frame at which branches are furthest apart, used to assign regions.
    pub reference_frame: usize,
}

fn branch_supports(stream: &mut BranchStream, bounds: &[f64]) -> Result<BranchSupports> {
    let grid = stream.states[0].grid().clone();
    let frames = stream.frames();
    let n_branches = stream.states.len();
    let ny = grid.points(1);
    let ys = grid.coords(1);
    let n_regions = bounds.len() + 1;
    // region_mass[frame][branch][region], normalised per branch
    let mut region_mass = vec![vec![vec![0.0; n_regions]; n_branches]; frames];
    let mut mean_y = vec![vec![0.0; frames]; n_branches];
    let node_region: Vec<usize> = ys.iter().map(|y| region_of(bounds, *y)).collect();
    loop {
        let i = stream.frame;
        for (b, psi) in stream.states.iter().enumerate() {
            let mut marginal = vec![0.0; ny];
            for (flat, z) in psi.amplitudes().iter().enumerate() {
                marginal[flat % ny] += z.norm_sqr();
            }
            let total: f64 = marginal.iter().sum();
            for (j, m) in marginal.iter().enumerate() {
                region_mass[i][b][node_region[j]] += m / total;
                mean_y[b][i] += ys[j] * m / total;
            }
        }
        if !stream.advance() {
            break;
        }
    }
    let branches = &stream.states;
    let reference_frame = if branches.len() < 2 {
        frames - 1
    } else {
        let spread = |i: usize| {
            let mut min = f64::INFINITY;
            for a in 0..branches.len() {
                for b in a + 1..branches.len() {
                    min = min.min((mean_y[a][i] - mean_y[b][i]).abs());
                }
            }
            min
        };
        (0..frames).fold(0, |best, i| if spread(i) > spread(best) { i } else { best })
    };
    let regions: Vec<usize> = mean_y.iter().map(|m| region_of(bounds, m[reference_frame])).collect();
    for a in 0..regions.len() {
        for b in a + 1..regions.len() {
            if regions[a] == regions[b] {
                return Err(Error::Experiment(format!("branches {a} and {b} read the same pointer region")));
            }
        }
    }
    let overlap = region_mass
        .iter()
        .map(|masses| {
            (0..branches.len())
                .map(|a| (0..branches.len()).filter(|&b| b != a).map(|b| masses[a][regions[b]]).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(BranchSupports { regions, mean_y, overlap, reference_frame })
}

/// Final-state branch structure `Ψ = Σ c_α ψ_α φ_α` with disjoint pointer supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchDecomposition {
    pub time: f64,
    pub weights: Vec<f64>,
    /// Pointer interval `[lower, upper)` of each branch.
    pub supports: Vec<(f64, f64)>,
    pub overlap: f64,
}

fn region_interval(bounds: &[f64], r: usize) -> (f64, f64) {
    let lower = if r == 0 { f64::NEG_INFINITY } else { bounds[r - 1] };
    let upper = bounds.get(r).copied().unwrap_or(f64::INFINITY);
    (lower, upper)
}

/// Label changes between distinct branches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SwitchCount {
    /// Between consecutive frames that both have disjoint supports.
    pub while_disjoint: usize,
    /// Any time after supports first became disjoint.
    pub after_separation: usize,
    /// Paths that switched at least once after separation.
    pub paths_switching: usize,
}

/// Branch read by the pointer position of every path at every frame.
fn label_paths(tset: &TrajectorySet, bounds: &[f64], regions: &[usize]) -> Vec<Vec<Option<usize>>> {
    tset.paths
        .iter()
        .map(|p| {
            (0..p.len())
                .map(|i| {
                    let y = p.position(i)[1];
                    if y.is_nan() {
                        return None;
                    }
                    let r = region_of(bounds, y);
                    regions.iter().position(|&b| b == r)
                })
                .collect()
        })
        .collect()
}

fn count_switches(labels: &[Vec<Option<usize>>], overlap: &[f64], threshold: f64) -> SwitchCount {
    let separated = overlap.iter().position(|o| *o < threshold);
    let mut count = SwitchCount::default();
    let Some(start) = separated else { return count };
    for path in labels {
        let mut switched = false;
        for i in start + 1..path.len() {
            if let (Some(a), Some(b)) = (path[i - 1], path[i]) {
                if a != b {
                    count.after_separation += 1;
                    switched = true;
                    if overlap[i - 1] < threshold && overlap[i] < threshold {
                        count.while_disjoint += 1;
                    }
                }
            }
        }
        count.paths_switching += switched as usize;
    }
    count
}

/// Outcome frequency of one branch against its weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornCheck {
    pub branch: usize,
    pub weight: f64,
    pub count: usize,
    pub frequency: f64,
    /// Binomial standard deviation `√(w(1−w)/n)`.
    pub sigma: f64,
    pub pass: bool,
}

pub struct PointerOutcome {
    pub spec: PointerExperimentSpec,
    pub stages: Vec<Stage>,
    /// Evolution of `Σ c_α ψ_α φ₀`.
    pub series: FrameSeries,
    /// `c_α ψ_α φ₀` for every branch.
    pub initial_branches: Vec<WaveFunction>,
    pub trajectories: TrajectorySet,
    pub supports: BranchSupports,
    /// Branch label of each path at each frame.
    pub labels: Vec<Vec<Option<usize>>>,
    pub decomposition: BranchDecomposition,
    pub switches: SwitchCount,
}

fn run_stages(spec: &PointerExperimentSpec, stages: &[Stage]) -> Result<PointerOutcome> {
    spec.check()?;
    let grid = Arc::new(Grid::new(spec.grid.clone())?);
    let initial = spec.initial_branches(&grid)?;
    let mut psi0 = initial[0].clone();
    for b in &initial[1..] {
        psi0.amplitudes_mut().iter_mut().zip(b.amplitudes()).for_each(|(a, z)| *a += z);
    }
    let series = evolve_stages(&psi0, stages, spec.dt, spec.frame_stride)?;
    let bounds = spec.boundaries();
    let mut stream = BranchStream::new(&initial, stages, spec.dt, spec.frame_stride)?;
    if stream.frames() != series.len() {
        return Err(Error::Experiment("branch stream and series disagree on frame count".into()));
    }
    let supports = branch_supports(&mut stream, &bounds)?;
    let psi0 = series.frame(0)?.into_owned().normalized()?;
    let points = sample_equilibrium(&psi0, spec.ensemble.n_trajectories, spec.ensemble.master_seed)?;
    let seeds: Vec<u64> = (0..points.len() as u64).collect();
    let trajectories = integrate_seeded(&series, &points, &seeds, &spec.ensemble)?;
    let labels = label_paths(&trajectories, &bounds, &supports.regions);
    let switches = count_switches(&labels, &supports.overlap, spec.overlap_threshold);
    let last = series.len() - 1;
    let decomposition = BranchDecomposition {
        time: series.times()[last],
        weights: spec.branches.iter().map(|b| b.weight).collect(),
        supports: supports.regions.iter().map(|&r| region_interval(&bounds, r)).collect(),
        overlap: supports.overlap[last],
    };
    Ok(PointerOutcome {
        spec: spec.clone(),
        stages: stages.to_vec(),
        series,
        initial_branches: initial,
        trajectories,
        supports,
        labels,
        decomposition,
        switches,
    })
}

/// Evolve `Σ c_α ψ_α φ₀` through interaction and drift, integrate an
/// equilibrium ensemble and read each run's pointer at the final time.
pub fn run_pointer_experiment(spec: &PointerExperimentSpec) -> Result<PointerOutcome> {
    let out = run_stages(spec, &spec.stages())?;
    if out.decomposition.overlap >= spec.overlap_threshold {
        return Err(Error::BranchOverlap(out.decomposition.overlap));
    }
    Ok(out)
}

impl PointerOutcome {
    /// Final pointer reading of every path (None for aborted paths).
    pub fn outcomes(&self) -> Vec<Option<usize>> {
        self.trajectories
            .paths
            .iter()
            .zip(&self.labels)
            .map(|(p, l)| if p.status == PathStatus::Ok { *l.last().expect("frames") } else { None })
            .collect()
    }

    pub fn born_checks(&self) -> Vec<BornCheck> {
        let outcomes = self.outcomes();
        let n = outcomes.iter().filter(|o| o.is_some()).count();
        self.spec
            .branches
            .iter()
            .enumerate()
            .map(|(b, spec)| {
                let count = outcomes.iter().filter(|o| **o == Some(b)).count();
                let frequency = count as f64 / n.max(1) as f64;
                let w = spec.weight;
                let sigma = (w * (1.0 - w) / n.max(1) as f64).sqrt();
                let pass = n > 0 && (frequency - w).abs() <= 3.0 * sigma + 1e-12;
                BornCheck { branch: b, weight: w, count, frequency, sigma, pass }
            })
            .collect()
    }

    pub fn report(&self) -> PointerReport {
        let outcomes = self.outcomes();
        let born = self.born_checks();
        let pass = born.iter().all(|b| b.pass)
            && self.switches.while_disjoint == 0
            && self.decomposition.overlap < self.spec.overlap_threshold;
        PointerReport {
            spec: self.spec.clone(),
            status: self.trajectories.status_counts(),
            unlabeled: outcomes.iter().filter(|o| o.is_none()).count(),
            born,
            decomposition: self.decomposition.clone(),
            times: self.series.times().to_vec(),
            overlap: self.supports.overlap.clone(),
            switches: self.switches,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointerReport {
    pub spec: PointerExperimentSpec,
    pub status: StatusCounts,
    pub unlabeled: usize,
    pub born: Vec<BornCheck>,
    pub decomposition: BranchDecomposition,
    pub times: Vec<f64>,
    pub overlap: Vec<f64>,
    pub switches: SwitchCount,
    pub pass: bool,
}

impl PointerReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Effective-collapse diagnostics along one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub path: usize,
    pub times: Vec<f64>,
    /// Branch whose pointer region contains `Y_t`.
    pub occupied: Vec<Option<usize>>,
    pub overlap: Vec<f64>,
    /// Share of `∫|Ψ(x, Y_t)|² dx` carried by unoccupied branches.
    pub cross_mass: Vec<f64>,
    /// `|v − v_occupied| / |v_occupied|` at `(X_t, Y_t)`.
    pub unoccupied_velocity: Vec<f64>,
    /// Disjoint supports, `Y_t` inside one of them and negligible cross mass.
    pub effective: Vec<bool>,
    /// Time from which the conditional stays effective to the end.
    pub effective_from: Option<f64>,
    /// Why the path was excluded, if it was.
    pub excluded: Option<String>,
}

/// Collapse diagnostics for the selected paths.
pub fn effective_collapse_report(outcome: &PointerOutcome, paths: &[usize]) -> Result<Vec<CollapseReport>> {
    let series = &outcome.series;
    let grid = series.grid();
    let slicer = Slicer::new(grid)?;
    let ops = FieldOps::new(grid.clone());
    let frames = series.len();
    let threshold = outcome.spec.overlap_threshold;
    let policy = &outcome.spec.ensemble.node_policy;
    let norm_sqr = series.frame(0)?.norm_sqr();
    let floor = policy.threshold(grid, norm_sqr) * grid.extent(0);
    let spec = &outcome.spec;
    let mut stream = BranchStream::new(&outcome.initial_branches, &outcome.stages, spec.dt, spec.frame_stride)?;
    let mut reports: Vec<CollapseReport> = paths
        .iter()
        .map(|&p| {
            let path = outcome.trajectories.paths.get(p);
            CollapseReport {
                path: p,
                times: series.times().to_vec(),
                occupied: outcome.labels.get(p).cloned().unwrap_or_default(),
                overlap: outcome.supports.overlap.clone(),
                cross_mass: vec![f64::NAN; frames],
                unoccupied_velocity: vec![f64::NAN; frames],
                effective: vec![false; frames],
                effective_from: None,
                excluded: match path {
                    None => Some("no such path".into()),
                    Some(t) if t.status != PathStatus::Ok => Some(format!("path status {}", t.status.as_str())),
                    _ => None,
                },
            }
        })
        .collect();
    for i in 0..frames {
        let total = series.frame(i)?;
        let total_frame = GuidingFrame::new(&total, &ops);
        let total_pair = GuidingPair::new(&total_frame, &total_frame, series.params(), policy, norm_sqr);
        if i > 0 {
            stream.advance();
        }
        let branch_frames = &stream.states;
        let t = series.times()[i];
        for r in reports.iter_mut().filter(|r| r.excluded.is_none()) {
            let q = outcome.trajectories.paths[r.path].position(i).to_vec();
            let Some(occ) = r.occupied[i] else { continue };
            let slice_norm = slicer.norm_sqr(&slicer.slice(total.amplitudes(), q[1])?);
            if slice_norm < floor {
                r.excluded = Some(format!("conditional norm {slice_norm:.3e} below threshold at t = {t}"));
                continue;
            }
            let mut cross = 0.0;
            for (b, f) in branch_frames.iter().enumerate() {
                if b != occ {
                    cross += slicer.norm_sqr(&slicer.slice(f.amplitudes(), q[1])?);
                }
            }
            r.cross_mass[i] = cross / slice_norm;
            if r.overlap[i] >= threshold {
                continue;
            }
            let occ_frame = GuidingFrame::new(&branch_frames[occ], &ops);
            let occ_pair = GuidingPair::new(&occ_frame, &occ_frame, series.params(), policy, norm_sqr);
            match (total_pair.velocity(t, &q), occ_pair.velocity(t, &q)) {
                (Ok(v), Ok(vo)) => {
                    let diff: f64 = (0..2).map(|k| (v[k] - vo[k]).powi(2)).sum::<f64>().sqrt();
                    let size: f64 = (0..2).map(|k| vo[k].powi(2)).sum::<f64>().sqrt();
                    r.unoccupied_velocity[i] = diff / size;
                }
                (Err(e), _) | (_, Err(e)) => {
                    r.excluded = Some(e.to_string());
                    continue;
                }
            }
            r.effective[i] = r.overlap[i] < threshold && r.cross_mass[i] < threshold;
        }
    }
    for r in &mut reports {
        if r.excluded.is_none() {
            let from = (0..frames).rev().take_while(|&i| r.effective[i]).last();
            r.effective_from = from.map(|i| r.times[i]);
        }
    }
    Ok(reports)
}

/// Worst-case collapse diagnostics after separation over a set of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseSummary {
    pub paths: usize,
    pub excluded: usize,
    pub max_cross_mass: f64,
    pub max_unoccupied_velocity: f64,
    /// Whether any path had an effective wave function at the first frame.
    pub effective_at_start: bool,
}

impl CollapseSummary {
    pub fn new(reports: &[CollapseReport], threshold: f64) -> Self {
        let mut s = Self {
            paths: reports.len(),
            excluded: 0,
            max_cross_mass: 0.0,
            max_unoccupied_velocity: 0.0,
            effective_at_start: false,
        };
        for r in reports {
            if r.excluded.is_some() {
                s.excluded += 1;
                continue;
            }
            s.effective_at_start |= r.effective.first().copied().unwrap_or(false);
            for i in 0..r.times.len() {
                if r.overlap[i] < threshold && r.occupied[i].is_some() {
                    s.max_cross_mass = s.max_cross_mass.max(r.cross_mass[i]);
                    s.max_unoccupied_velocity = s.max_unoccupied_velocity.max(r.unoccupied_velocity[i]);
                }
            }
        }
        s
    }
}

/// Second interaction and drift appended to an experiment to bring the
/// pointer branches back together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reversal {
    pub coupling: f64,
    pub duration: f64,
    pub drift_time: f64,
}

impl Reversal {
    /// Reverse the pointer momenta: coupling `−g/2` for four interaction times.
    pub fn mirror(spec: &PointerExperimentSpec, drift_time: f64) -> Self {
        Self { coupling: -0.5 * spec.coupling, duration: 4.0 * spec.interaction_time, drift_time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevivalReport {
    pub times: Vec<f64>,
    pub overlap: Vec<f64>,
    /// First time the supports are disjoint.
    pub separated_at: Option<f64>,
    /// Intervals after separation during which supports overlap again.
    pub reoverlap_windows: Vec<(f64, f64)>,
    pub switches: SwitchCount,
    pub paths: usize,
}

/// Overlap-in-time curve and label switches for an experiment whose
/// branches are driven back together after separating.
pub fn branch_revival_probe(spec: &PointerExperimentSpec, reversal: &Reversal) -> Result<RevivalReport> {
    let mut stages = spec.stages();
    stages.push(Stage { coupling: reversal.coupling, duration: reversal.duration });
    stages.push(Stage { coupling: 0.0, duration: reversal.drift_time });
    let out = run_stages(spec, &stages)?;
    let threshold = spec.overlap_threshold;
    let times = out.series.times().to_vec();
    let overlap = out.supports.overlap.clone();
    let start = overlap.iter().position(|o| *o < threshold);
    let mut windows = Vec::new();
    if let Some(start) = start {
        let mut open: Option<usize> = None;
        for i in start..overlap.len() {
            match (open, overlap[i] >= threshold) {
                (None, true) => open = Some(i),
                (Some(a), false) => {
                    windows.push((times[a], times[i - 1]));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(a) = open {
            windows.push((times[a], times[overlap.len() - 1]));
        }
    }
    Ok(RevivalReport {
        separated_at: start.map(|i| times[i]),
        times,
        overlap,
        reoverlap_windows: windows,
        switches: out.switches,
        paths: out.trajectories.len(),
    })
}
