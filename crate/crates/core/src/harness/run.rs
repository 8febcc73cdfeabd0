//! Scenario execution, artifact writing and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{canonicalize, Analysis, InitialState, Mode, ScenarioConfig};
use crate::ensemble::{equivariance_check, integrate_ensemble, non_crossing_check, sample_equilibrium, TrajectorySet};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::guidance::{nonlocality_probe, velocity_grid, velocity_spinor_grid, NodePolicy};
use crate::measurement::{effective_collapse_report, run_pointer_experiment, CollapseSummary};
use crate::polar::{classical_limit_study, hj_residual, polar_decompose, ClassicalLimitSpec};
use crate::potential::Potential;
use crate::propagator::{discrete_ground_state, evolve_shared, FrameSeries};
use crate::state::{GaussianPacket, PhysicalParams, SpinorWaveFunction, WaveFunction};
use crate::C64;

pub const RUN_FORMAT: &str = "pilot-wave-run";
pub const RUN_FORMAT_VERSION: u32 = 1;
/// Run manifest file at the root of a run directory.
pub const RUN_MANIFEST: &str = "manifest.json";
/// Frames exported for plotting one-dimensional runs.
const DENSE_FRAMES_1D: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub analysis: String,
    pub pass: bool,
    pub detail: String,
}

/// Record of one run. Everything except `timings` is a pure function of
/// the config and the tool version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub scenario: String,
    pub seed: u64,
    /// Canonical config text.
    pub config: String,
    /// SHA-256 of every artifact, keyed by `/`-separated relative path.
    pub artifacts: BTreeMap<String, String>,
    pub timings: Vec<PhaseTiming>,
    pub analyses: Vec<AnalysisSummary>,
    pub pass: bool,
}

impl RunManifest {
    pub fn read(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(RUN_MANIFEST);
        if !path.is_file() {
            return Err(Error::MissingArtifact(path));
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format { path, message: e.to_string() })
    }

    pub fn analysis(&self, name: &str) -> Option<&AnalysisSummary> {
        self.analyses.iter().find(|a| a.analysis == name)
    }
}

struct Clock {
    timings: Vec<PhaseTiming>,
}

impl Clock {
    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_phase(name));
        self.timings.push(PhaseTiming { phase: name.into(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}

enum InitialField {
    Scalar(WaveFunction),
    Spinor(SpinorWaveFunction),
}

fn weighted(p: &GaussianPacket, grid: &Arc<Grid>, params: &PhysicalParams, c: [f64; 2]) -> Result<Vec<C64>> {
    let psi = p.build(grid.clone(), params.clone())?;
    let c = C64::new(c[0], c[1]);
    Ok(psi.amplitudes().iter().map(|z| c * z).collect())
}

fn two_particle(first: &GaussianPacket, second: &GaussianPacket, exchange: [f64; 2], grid: &Arc<Grid>, params: &PhysicalParams) -> Result<WaveFunction> {
    let c = C64::new(exchange[0], exchange[1]);
    let n1 = grid.points(1);
    let amps: Vec<C64> = (0..grid.len())
        .map(|flat| {
            let (x, y) = (grid.coord_of(flat, 0), grid.coord_of(flat, 1));
            first.amplitude(&[x]) * second.amplitude(&[y]) + c * second.amplitude(&[x]) * first.amplitude(&[y])
        })
        .collect();
    debug_assert_eq!(amps.len(), grid.points(0) * n1);
    let raw = WaveFunction::unnormalized(grid.clone(), params.clone(), amps, 0.0)?;
    if raw.norm() < 1e-12 {
        return Err(Error::DestructiveCancellation(raw.norm()));
    }
    raw.normalized()
}

fn build_initial(config: &ScenarioConfig, grid: &Arc<Grid>, params: &PhysicalParams, potential: &Potential) -> Result<InitialField> {
    let scalar = match &config.initial {
        InitialState::Gaussian { center, sigma, momentum } => {
            GaussianPacket::new(center.clone(), sigma.clone(), momentum.clone()).build(grid.clone(), params.clone())?
        }
        InitialState::GroundState { center, sigma } => {
            let guess = GaussianPacket::new(center.clone(), sigma.clone(), vec![]).build(grid.clone(), params.clone())?;
            discrete_ground_state(&guess, potential)?.0
        }
        InitialState::Superposition { components } => {
            let mut sum = vec![C64::default(); grid.len()];
            for c in components {
                for (s, z) in sum.iter_mut().zip(weighted(&c.packet(), grid, params, c.amplitude)?) {
                    *s += z;
                }
            }
            let raw = WaveFunction::unnormalized(grid.clone(), params.clone(), sum, 0.0)?;
            if raw.norm() < 1e-12 {
                return Err(Error::DestructiveCancellation(raw.norm()));
            }
            raw.normalized()?
        }
        InitialState::Spinor { up, down, up_amplitude, down_amplitude } => {
            let u = weighted(up, grid, params, *up_amplitude)?;
            let d = weighted(down, grid, params, *down_amplitude)?;
            let raw = SpinorWaveFunction::new(grid.clone(), params.clone(), u.clone(), d.clone())?;
            let n = raw.norm();
            let scale = |v: Vec<C64>| v.into_iter().map(|z| z / n).collect();
            return Ok(InitialField::Spinor(SpinorWaveFunction::new(grid.clone(), params.clone(), scale(u), scale(d))?));
        }
        InitialState::TwoParticle { first, second, exchange } => two_particle(first, second, *exchange, grid, params)?,
        InitialState::PointerBranches { .. } => {
            return Err(Error::Experiment("pointer-branches states are built by the measurement pipeline".into()))
        }
    };
    Ok(InitialField::Scalar(scalar))
}

/// Empty the output directory, refusing to touch one that is not a run.
fn prepare_output(dir: &Path) -> Result<()> {
    if dir.exists() {
        let empty = fs::read_dir(dir)?.next().is_none();
        if !empty && !dir.join(RUN_MANIFEST).is_file() {
            return Err(Error::Format {
                path: dir.to_path_buf(),
                message: "output directory exists and does not hold a previous run".into(),
            });
        }
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walk stays under root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}

/// Checksums of every file under `dir` except the run manifest and plots.
pub fn artifact_checksums(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files
        .into_iter()
        .filter(|f| f != RUN_MANIFEST && !f.starts_with("plots/"))
        .map(|f| {
            let sum = sha256_file(&dir.join(&f))?;
            Ok((f, sum))
        })
        .collect()
}

fn frame_of(series: &FrameSeries, t: f64) -> Result<usize> {
    series.frame_index(t).ok_or_else(|| Error::Checkpoint(format!("{t} is not a frame time")))
}

/// Frames exported to `frames/`: checkpoints, plus an even subsample in 1D.
fn exported_frames(config: &ScenarioConfig, series: &FrameSeries) -> Result<Vec<usize>> {
    let mut frames = vec![0, series.len() - 1];
    for a in &config.analysis {
        if let Analysis::Equivariance { checkpoints, .. } | Analysis::Polar { checkpoints, .. } = a {
            for t in checkpoints {
                frames.push(frame_of(series, *t)?);
            }
        }
    }
    if series.grid().dim() == 1 {
        let step = series.len().div_ceil(DENSE_FRAMES_1D).max(1);
        frames.extend((0..series.len()).step_by(step));
    }
    frames.sort_unstable();
    frames.dedup();
    Ok(frames)
}

fn trajectory_frames(config: &ScenarioConfig, series: &FrameSeries) -> Result<Vec<usize>> {
    let mut frames = Vec::new();
    for a in &config.analysis {
        if let Analysis::Equivariance { checkpoints, .. } = a {
            for t in checkpoints {
                frames.push(frame_of(series, *t)?);
            }
        }
    }
    if frames.is_empty() {
        frames = vec![0, series.len() - 1];
    }
    frames.sort_unstable();
    frames.dedup();
    Ok(frames)
}

fn write_paths(tset: &TrajectorySet, dir: &Path, limit: usize) -> Result<()> {
    let subset = TrajectorySet { dim: tset.dim, times: tset.times.clone(), paths: tset.paths.iter().take(limit).cloned().collect() };
    subset.write_binary(dir)
}

fn in_region(grid: &Grid, flat: usize, region: Option<[f64; 2]>) -> bool {
    region.is_none_or(|[lo, hi]| (0..grid.dim()).all(|k| {
        let x = grid.coord_of(flat, k);
        x > lo && x < hi
    }))
}

#[derive(Serialize)]
struct PolarCheckpoint {
    time: f64,
    frame: usize,
    components: usize,
    warnings: Vec<String>,
    max_energy_error: Option<f64>,
    max_hj_residual: Option<f64>,
    pass: bool,
}

struct Context<'a> {
    config: &'a ScenarioConfig,
    dir: &'a Path,
    grid: &'a Arc<Grid>,
    params: &'a PhysicalParams,
    potential: &'a Arc<Potential>,
    policy: NodePolicy,
}

fn summary(analysis: &Analysis, pass: bool, detail: String) -> AnalysisSummary {
    AnalysisSummary { analysis: analysis.name().into(), pass, detail }
}

fn run_analysis(
    cx: &Context,
    analysis: &Analysis,
    initial: &InitialField,
    series: Option<&FrameSeries>,
    tset: Option<&TrajectorySet>,
) -> Result<AnalysisSummary> {
    let dir = cx.dir;
    let need_series = || series.ok_or_else(|| Error::Experiment("analysis needs an evolved series".into()));
    let need_paths = || tset.ok_or_else(|| Error::Experiment("analysis needs a trajectory ensemble".into()));
    let scalar = || match initial {
        InitialField::Scalar(psi) => Ok(psi),
        InitialField::Spinor(_) => Err(Error::Experiment("analysis needs a scalar state".into())),
    };
    Ok(match analysis {
        Analysis::Equivariance { checkpoints, ks_tolerance, forbid_node_aborts } => {
            let (series, tset) = (need_series()?, need_paths()?);
            let report = equivariance_check(tset, series, checkpoints, *ks_tolerance)?;
            report.write_json(&dir.join("equivariance.json"))?;
            let aborts = tset.status_counts().node_abort;
            let pass = report.pass && !(*forbid_node_aborts && aborts > 0);
            let tol = report.checkpoints.first().map_or(0.0, |c| c.ks_tolerance);
            summary(analysis, pass, format!("max KS {:.4} (tolerance {tol:.4}), {aborts} node aborts", report.max_ks()))
        }
        Analysis::NonCrossing => {
            let tset = need_paths()?;
            let pass = non_crossing_check(tset, cx.grid)?;
            let ok = tset.status_counts().ok;
            write_json(&dir.join("non_crossing.json"), &serde_json::json!({ "ok_paths": ok, "ordered": pass }))?;
            summary(analysis, pass, format!("{ok} ok paths, ordering {}", if pass { "preserved" } else { "violated" }))
        }
        Analysis::Unitarity { tolerance } => {
            let series = need_series()?;
            let mut worst = 0.0f64;
            for i in 0..series.len() {
                worst = worst.max((series.frame(i)?.norm() - 1.0).abs());
            }
            let pass = worst < *tolerance;
            write_json(
                &dir.join("unitarity.json"),
                &serde_json::json!({ "frames": series.len(), "max_norm_deviation": worst, "tolerance": tolerance, "pass": pass }),
            )?;
            summary(analysis, pass, format!("max |norm - 1| = {worst:.3e} over {} frames", series.len()))
        }
        Analysis::Polar { checkpoints, energy, energy_tolerance, region, hj_tolerance } => {
            let series = need_series()?;
            let mut rows = Vec::new();
            for &t in checkpoints {
                let i = frame_of(series, t)?;
                let psi = series.frame(i)?;
                let polar = polar_decompose(&psi)?;
                polar.write_dir(&dir.join("polar").join(format!("frame-{i:05}")), cx.params, t)?;
                let v = series.potential_at(i).values();
                let max_energy_error = energy.map(|e| {
                    (0..v.len())
                        .filter(|&j| polar.mask[j] && in_region(cx.grid, j, *region))
                        .map(|j| (v[j] + polar.u[j] - e).abs())
                        .fold(0.0, f64::max)
                });
                let max_hj_residual = match hj_tolerance {
                    Some(_) => {
                        let r = hj_residual(series, t)?;
                        Some(
                            r.iter()
                                .enumerate()
                                .filter(|(j, x)| x.is_finite() && in_region(cx.grid, *j, *region))
                                .map(|(_, x)| x.abs())
                                .fold(0.0, f64::max),
                        )
                    }
                    None => None,
                };
                let pass = max_energy_error.is_none_or(|e| e < *energy_tolerance)
                    && max_hj_residual.zip(*hj_tolerance).is_none_or(|(r, tol)| r < tol);
                rows.push(PolarCheckpoint {
                    time: t,
                    frame: i,
                    components: polar.components,
                    warnings: polar.warnings.clone(),
                    max_energy_error,
                    max_hj_residual,
                    pass,
                });
            }
            write_json(&dir.join("polar.json"), &rows)?;
            let pass = rows.iter().all(|r| r.pass);
            let worst_e = rows.iter().filter_map(|r| r.max_energy_error).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            let worst_hj = rows.iter().filter_map(|r| r.max_hj_residual).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            let mut detail = format!("{} checkpoints", rows.len());
            if let Some(e) = worst_e {
                detail.push_str(&format!(", max |V+U-E| = {e:.3e}"));
            }
            if let Some(r) = worst_hj {
                detail.push_str(&format!(", max HJ residual = {r:.3e}"));
            }
            summary(analysis, pass, detail)
        }
        Analysis::ClassicalLimit { scale_factors } => {
            let InitialState::Gaussian { center, sigma, momentum } = &cx.config.initial else {
                return Err(Error::Experiment("classical-limit needs a gaussian initial state".into()));
            };
            let velocity = (0..cx.grid.dim())
                .map(|k| momentum.get(k).copied().unwrap_or(0.0) * cx.params.hbar / cx.params.masses[k])
                .collect();
            let base_dt = cx.config.ensemble.as_ref().map_or(cx.config.propagator.frame_interval(), |e| e.base_dt);
            let spec = ClassicalLimitSpec {
                grid: cx.config.grid.clone(),
                params: cx.params.clone(),
                potential: cx.potential.kind().clone(),
                center: center.clone(),
                sigma: sigma.clone(),
                velocity,
                propagator: cx.config.propagator.clone(),
                base_dt,
                scale_factors: scale_factors.clone(),
            };
            let table = classical_limit_study(&spec)?;
            table.write_csv(&dir.join("classical_limit.csv"))?;
            write_json(&dir.join("classical_limit.json"), &table)?;
            let pass = table.strictly_decreasing();
            let devs: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.max_deviation)).collect();
            summary(analysis, pass, format!("max deviation by scale: {}", devs.join(", ")))
        }
        Analysis::Nonlocality { q0, partner, min_spread, max_spread, product_tolerance } => {
            let psi = scalar()?;
            let probe = nonlocality_probe(psi, *q0, partner, &cx.policy)?;
            let product = match &cx.config.initial {
                InitialState::TwoParticle { first, second, exchange } if *exchange != [0.0, 0.0] => {
                    let p = two_particle(first, second, [0.0, 0.0], cx.grid, cx.params)?;
                    Some(nonlocality_probe(&p, *q0, partner, &cx.policy)?.spread)
                }
                _ => None,
            };
            let pass = min_spread.is_none_or(|m| probe.spread > m)
                && max_spread.is_none_or(|m| probe.spread < m)
                && product.is_none_or(|s| s < *product_tolerance);
            write_json(
                &dir.join("nonlocality.json"),
                &serde_json::json!({
                    "q0": q0,
                    "partner": partner,
                    "velocities": probe.velocities,
                    "spread": probe.spread,
                    "product_spread": product,
                    "pass": pass,
                }),
            )?;
            let mut detail = format!("spread {:.3e}", probe.spread);
            if let Some(s) = product {
                detail.push_str(&format!(", product-state spread {s:.3e}"));
            }
            summary(analysis, pass, detail)
        }
        Analysis::VelocityField => {
            let field = match initial {
                InitialField::Scalar(psi) => velocity_grid(psi, &cx.policy)?,
                InitialField::Spinor(psi) => velocity_spinor_grid(psi, &cx.policy)?,
            };
            field.write_dir(&dir.join("velocity"), cx.params, 0.0)?;
            let masked = field.mask.iter().filter(|m| !**m).count();
            summary(analysis, true, format!("max |v| = {:.3e}, {masked} masked points", field.max_abs()))
        }
        Analysis::Measurement { .. } => {
            return Err(Error::Experiment("measurement runs through the pointer pipeline".into()));
        }
    })
}

fn run_pipeline(config: &ScenarioConfig, dir: &Path, clock: &mut Clock) -> Result<Vec<AnalysisSummary>> {
    let (grid, params, potential, initial) = clock.phase("setup", || {
        let grid = Arc::new(Grid::new(config.grid.clone())?);
        let params = config.physical_params()?;
        let potential = Arc::new(config.build_potential(grid.clone(), &params)?);
        let initial = build_initial(config, &grid, &params, &potential)?;
        Ok((grid, params, potential, initial))
    })?;
    let policy = config.ensemble.as_ref().map(|e| e.node_policy).unwrap_or_default();
    let evolve_needed = config.analysis.iter().any(Analysis::needs_evolution);
    let series = match (&initial, evolve_needed) {
        (InitialField::Scalar(psi), true) => Some(clock.phase("evolve", || evolve_shared(psi, potential.clone(), &config.propagator))?),
        _ => None,
    };
    let tset = match (&initial, &series, config.ensemble_spec()) {
        (InitialField::Scalar(psi), Some(series), Some(spec)) => {
            let points = clock.phase("sample", || sample_equilibrium(psi, spec.n_trajectories, spec.master_seed))?;
            Some(clock.phase("integrate", || integrate_ensemble(series, &points, &spec))?)
        }
        _ => None,
    };
    clock.phase("write", || {
        if let Some(series) = &series {
            series.write_frames(&dir.join("frames"), exported_frames(config, series)?)?;
            if let Some(tset) = &tset {
                tset.write_csv(&dir.join("trajectories.csv"), &trajectory_frames(config, series)?)?;
                write_paths(tset, &dir.join("paths"), config.plot_paths)?;
            }
        }
        Ok(())
    })?;
    let cx = Context { config, dir, grid: &grid, params: &params, potential: &potential, policy };
    let mut out = Vec::new();
    for a in &config.analysis {
        out.push(clock.phase(a.name(), || run_analysis(&cx, a, &initial, series.as_ref(), tset.as_ref()))?);
    }
    Ok(out)
}

fn run_measurement(config: &ScenarioConfig, dir: &Path, clock: &mut Clock) -> Result<Vec<AnalysisSummary>> {
    let Some(Analysis::Measurement { collapse_paths, .. }) = config.analysis.first() else {
        return Err(Error::Experiment("measurement scenario without a measurement analysis".into()));
    };
    let spec = config
        .pointer_experiment()
        .ok_or_else(|| Error::Experiment("scenario does not describe a pointer experiment".into()))?;
    let outcome = clock.phase("measurement", || run_pointer_experiment(&spec))?;
    let collapse = clock.phase("collapse", || {
        let paths: Vec<usize> = (0..outcome.trajectories.len()).take(*collapse_paths).collect();
        effective_collapse_report(&outcome, &paths)
    })?;
    let threshold = spec.overlap_threshold;
    let collapse_summary = CollapseSummary::new(&collapse, threshold);
    let report = outcome.report();
    clock.phase("write", || {
        report.write_json(&dir.join("measurement.json"))?;
        write_json(&dir.join("collapse.json"), &serde_json::json!({ "summary": collapse_summary, "paths": collapse }))?;
        let last = outcome.series.len() - 1;
        outcome.series.write_frames(&dir.join("frames"), [0, last])?;
        outcome.trajectories.write_csv(&dir.join("trajectories.csv"), &[0, last])?;
        write_paths(&outcome.trajectories, &dir.join("paths"), config.plot_paths)
    })?;
    let pass = report.pass && collapse_summary.max_cross_mass < threshold;
    let born: Vec<String> = report.born.iter().map(|b| format!("{:.3} vs {:.3}", b.frequency, b.weight)).collect();
    let detail = format!(
        "frequencies {}; {} switches while disjoint; max cross-branch mass {:.2e}",
        born.join(", "),
        report.switches.while_disjoint,
        collapse_summary.max_cross_mass
    );
    Ok(vec![AnalysisSummary { analysis: "measurement".into(), pass, detail }])
}

/// Execute the scenario, write all artifacts and the manifest into its
/// output directory and return the manifest.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunManifest> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let dir = config.output_dir();
    prepare_output(&dir)?;
    let mut clock = Clock { timings: Vec::new() };
    let analyses = match config.mode() {
        Mode::Measurement => run_measurement(config, &dir, &mut clock)?,
        Mode::Pipeline | Mode::Spinor => run_pipeline(config, &dir, &mut clock)?,
    };
    let artifacts = artifact_checksums(&dir)?;
    let manifest = RunManifest {
        format: RUN_FORMAT.into(),
        version: RUN_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        scenario: config.name.clone(),
        seed: config.seed,
        config: canonicalize(config),
        artifacts,
        timings: clock.timings,
        pass: analyses.iter().all(|a| a.pass),
        analyses,
    };
    write_json(&dir.join(RUN_MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Result of re-checking a run directory against its manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub checked: usize,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
    /// Files present but not listed in the manifest.
    pub unlisted: Vec<String>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty() && self.unlisted.is_empty()
    }
}

/// Recompute artifact checksums and compare them with the manifest.
pub fn verify_run(run_dir: &Path) -> Result<Verification> {
    let manifest = RunManifest::read(run_dir)?;
    let present = artifact_checksums(run_dir)?;
    let mut v = Verification { checked: 0, mismatched: Vec::new(), missing: Vec::new(), unlisted: Vec::new() };
    for (name, sum) in &manifest.artifacts {
        match present.get(name) {
            None => v.missing.push(name.clone()),
            Some(s) => {
                v.checked += 1;
                if s != sum {
                    v.mismatched.push(name.clone());
                }
            }
        }
    }
    v.unlisted = present.keys().filter(|k| !manifest.artifacts.contains_key(*k)).cloned().collect();
    Ok(v)
}
