//! Scenario configuration: TOML text to a validated [`ScenarioConfig`].
//!
//! The grammar is documented in `docs/config.md`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ensemble::{EnsembleSpec, Integrator};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, GridSpec};
use crate::guidance::NodePolicy;
use crate::measurement::{BranchSpec, PointerExperimentSpec, PointerSpec};
use crate::potential::{Potential, PotentialKind};
use crate::propagator::{Method, PropagatorSpec};
use crate::state::{GaussianPacket, PhysicalParams, BOUNDARY_TAIL_LIMIT};

/// Where the potential comes from: inline descriptor or a CSV of grid values.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSource {
    Inline(PotentialKind),
    Csv(CsvPotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvPotential {
    /// Path to the CSV, relative to the config file.
    pub csv: PathBuf,
}

impl Default for PotentialSource {
    fn default() -> Self {
        PotentialSource::Inline(PotentialKind::Free)
    }
}

impl Serialize for PotentialSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PotentialSource::Inline(k) => k.serialize(s),
            PotentialSource::Csv(c) => c.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PotentialSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = toml::Value::deserialize(d)?;
        if v.get("csv").is_some() {
            CsvPotential::deserialize(v).map(PotentialSource::Csv).map_err(D::Error::custom)
        } else {
            PotentialKind::deserialize(v).map(PotentialSource::Inline).map_err(D::Error::custom)
        }
    }
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

fn is_unit(a: &[f64; 2]) -> bool {
    *a == unit_amplitude()
}

/// One Gaussian term `amplitude · packet` of a superposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    /// `[re, im]`.
    #[serde(default = "unit_amplitude", skip_serializing_if = "is_unit")]
    pub amplitude: [f64; 2],
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub momentum: Vec<f64>,
}

impl Component {
    pub fn packet(&self) -> GaussianPacket {
        GaussianPacket::new(self.center.clone(), self.sigma.clone(), self.momentum.clone())
    }
}

/// Initial-state descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        center: Vec<f64>,
        sigma: Vec<f64>,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// Lowest eigenstate of the grid Hamiltonian, refined from a Gaussian
    /// guess (one-dimensional Dirichlet grids).
    GroundState { center: Vec<f64>, sigma: Vec<f64> },
    Superposition { components: Vec<Component> },
    /// Two-component spinor; each component is a Gaussian.
    Spinor {
        up: GaussianPacket,
        down: GaussianPacket,
        #[serde(default = "unit_amplitude")]
        up_amplitude: [f64; 2],
        #[serde(default = "unit_amplitude")]
        down_amplitude: [f64; 2],
    },
    /// `a(q₀)·b(q₁) + exchange · b(q₀)·a(q₁)` for two one-dimensional particles.
    TwoParticle {
        first: GaussianPacket,
        second: GaussianPacket,
        #[serde(default)]
        exchange: [f64; 2],
    },
    /// System branches `Σ c_α ψ_α(x)` times a pointer packet `φ(y)`.
    PointerBranches { branches: Vec<BranchSpec>, pointer: PointerSpec },
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            InitialState::Gaussian { .. } => "gaussian",
            InitialState::GroundState { .. } => "ground-state",
            InitialState::Superposition { .. } => "superposition",
            InitialState::Spinor { .. } => "spinor",
            InitialState::TwoParticle { .. } => "two-particle",
            InitialState::PointerBranches { .. } => "pointer-branches",
        }
    }
}

fn default_unitarity() -> f64 {
    1e-9
}

fn default_energy_tolerance() -> f64 {
    1e-6
}

fn default_overlap() -> f64 {
    1e-6
}

fn default_collapse_paths() -> usize {
    40
}

fn default_product_tolerance() -> f64 {
    1e-12
}

/// A requested analysis and its pass criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Analysis {
    /// KS comparison of the ensemble with `|ψ_t|²` at checkpoint times.
    Equivariance {
        checkpoints: Vec<f64>,
        /// Defaults to the 99% KS quantile for the number of ok paths.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ks_tolerance: Option<f64>,
        #[serde(default)]
        forbid_node_aborts: bool,
    },
    /// Ordering of one-dimensional paths is preserved.
    NonCrossing,
    /// Largest `|‖ψ‖ − 1|` over stored frames.
    Unitarity {
        #[serde(default = "default_unitarity")]
        tolerance: f64,
    },
    /// Amplitude, phase and quantum potential at checkpoints.
    Polar {
        checkpoints: Vec<f64>,
        /// Check `V + U = energy` where every coordinate lies in `region`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        energy: Option<f64>,
        #[serde(default = "default_energy_tolerance")]
        energy_tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<[f64; 2]>,
        /// Bound on the Hamilton–Jacobi residual at interior checkpoints.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hj_tolerance: Option<f64>,
    },
    /// Bohmian against Newtonian centre path for each mass scale.
    ClassicalLimit { scale_factors: Vec<f64> },
    /// Pointer experiment: Born frequencies, label switches, effective collapse.
    Measurement {
        interaction_time: f64,
        drift_time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region_boundaries: Option<Vec<f64>>,
        #[serde(default = "default_overlap")]
        overlap_threshold: f64,
        #[serde(default = "default_collapse_paths")]
        collapse_paths: usize,
    },
    /// Spread over `q₁`-partner positions of the velocity of particle 0 at `q0`.
    Nonlocality {
        q0: f64,
        partner: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_spread: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_spread: Option<f64>,
        /// Bound on the spread for the product state obtained by dropping
        /// the exchange term of a two-particle state.
        #[serde(default = "default_product_tolerance")]
        product_tolerance: f64,
    },
    /// Export the velocity field of the initial state.
    VelocityField,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Equivariance { .. } => "equivariance",
            Analysis::NonCrossing => "non-crossing",
            Analysis::Unitarity { .. } => "unitarity",
            Analysis::Polar { .. } => "polar",
            Analysis::ClassicalLimit { .. } => "classical-limit",
            Analysis::Measurement { .. } => "measurement",
            Analysis::Nonlocality { .. } => "nonlocality",
            Analysis::VelocityField => "velocity-field",
        }
    }

    /// Needs the evolved frame series of the scenario state.
    pub fn needs_evolution(&self) -> bool {
        matches!(
            self,
            Analysis::Equivariance { .. } | Analysis::NonCrossing | Analysis::Unitarity { .. } | Analysis::Polar { .. }
        )
    }

    /// Needs the integrated trajectory ensemble.
    pub fn needs_trajectories(&self) -> bool {
        matches!(self, Analysis::Equivariance { .. } | Analysis::NonCrossing)
    }
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    /// One per axis; defaults to unit masses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
}

fn default_shrink() -> f64 {
    EnsembleSpec::new(1, 0, 1.0).node_retry_shrink
}

fn default_retries() -> u32 {
    EnsembleSpec::new(1, 0, 1.0).max_retries
}

/// Ensemble settings; the master seed is the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub base_dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_shrink")]
    pub node_retry_shrink: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub node_policy: NodePolicy,
}

impl EnsembleConfig {
    pub fn spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            n_trajectories: self.n_trajectories,
            master_seed: seed,
            integrator: self.integrator,
            base_dt: self.base_dt,
            node_retry_shrink: self.node_retry_shrink,
            max_retries: self.max_retries,
            node_policy: self.node_policy,
        }
    }
}

fn default_plot_paths() -> usize {
    64
}

/// Text form before validation: every required field is optional here so
/// that all missing fields are reported together.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    #[serde(default)]
    description: String,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(default = "default_plot_paths")]
    plot_paths: usize,
    grid: Option<GridSpec>,
    params: Option<ParamsConfig>,
    #[serde(default)]
    potential: PotentialSource,
    initial: Option<InitialState>,
    propagator: Option<PropagatorSpec>,
    ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    analysis: Vec<Analysis>,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub seed: u64,
    /// Defaults to `runs/<name>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Number of dense paths exported for plotting.
    pub plot_paths: usize,
    pub grid: GridSpec,
    pub params: ParamsConfig,
    pub potential: PotentialSource,
    pub initial: InitialState,
    pub propagator: PropagatorSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    pub analysis: Vec<Analysis>,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// How a scenario is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Evolve, sample, integrate, then the requested analyses.
    Pipeline,
    /// Staged pointer experiment.
    Measurement,
    /// Spinor state evaluated at the initial time.
    Spinor,
}

impl ScenarioConfig {
    pub fn mode(&self) -> Mode {
        match self.initial {
            InitialState::PointerBranches { .. } => Mode::Measurement,
            InitialState::Spinor { .. } => Mode::Spinor,
            _ => Mode::Pipeline,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| Path::new("runs").join(&self.name))
    }

    pub fn physical_params(&self) -> Result<PhysicalParams> {
        let dim = self.grid.axes.len();
        PhysicalParams::new(self.params.hbar, self.params.masses.clone().unwrap_or_else(|| vec![1.0; dim]))
    }

    pub fn ensemble_spec(&self) -> Option<EnsembleSpec> {
        self.ensemble.as_ref().map(|e| e.spec(self.seed))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Realize the potential on `grid`.
    pub fn build_potential(&self, grid: Arc<Grid>, params: &PhysicalParams) -> Result<Potential> {
        match &self.potential {
            PotentialSource::Inline(kind) => Potential::new(kind.clone(), grid, params),
            PotentialSource::Csv(c) => Potential::from_csv(&self.resolve(&c.csv), grid, params),
        }
    }

    /// The pointer experiment described by a measurement scenario.
    pub fn pointer_experiment(&self) -> Option<PointerExperimentSpec> {
        let InitialState::PointerBranches { branches, pointer } = &self.initial else {
            return None;
        };
        let coupling = match &self.potential {
            PotentialSource::Inline(PotentialKind::Bilinear { strength }) => *strength,
            _ => return None,
        };
        let Some(Analysis::Measurement { interaction_time, drift_time, region_boundaries, overlap_threshold, .. }) =
            self.analysis.iter().find(|a| matches!(a, Analysis::Measurement { .. }))
        else {
            return None;
        };
        Some(PointerExperimentSpec {
            grid: self.grid.clone(),
            params: self.physical_params().ok()?,
            branches: branches.clone(),
            pointer: pointer.clone(),
            coupling,
            interaction_time: *interaction_time,
            drift_time: *drift_time,
            dt: self.propagator.dt,
            frame_stride: self.propagator.frame_stride,
            ensemble: self.ensemble_spec()?,
            region_boundaries: region_boundaries.clone(),
            overlap_threshold: *overlap_threshold,
        })
    }

    /// Every problem with the config, empty when it is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.name.trim().is_empty() {
            out.push("name: must not be empty".into());
        }
        if self.name.contains(['/', '\\']) {
            out.push("name: must not contain path separators".into());
        }
        out.extend(self.grid.violations().into_iter().map(|v| format!("grid: {v}")));
        let grid = Grid::new(self.grid.clone()).ok().map(Arc::new);
        let dim = self.grid.axes.len();
        let params = match self.physical_params() {
            Ok(p) => {
                out.extend(p.violations(Some(dim)).into_iter().map(|v| format!("params: {v}")));
                Some(p)
            }
            Err(e) => {
                out.push(format!("params: {e}"));
                None
            }
        };
        out.extend(self.propagator.violations(grid.as_deref()).into_iter().map(|v| format!("propagator: {v}")));
        if let Some(e) = &self.ensemble {
            let h = self.propagator.frame_interval();
            out.extend(e.spec(self.seed).violations(Some(h)).into_iter().map(|v| v.replacen("ensemble.", "ensemble: ", 1)));
        }
        if let (Some(g), Some(p)) = (&grid, &params) {
            if let PotentialSource::Inline(kind) = &self.potential {
                out.extend(kind.violations(g).into_iter().map(|v| format!("potential: {v}")));
            }
            match self.build_potential(g.clone(), p) {
                Ok(v) => {
                    let phase = self.propagator.dt * v.max_abs() / p.hbar;
                    if self.propagator.method == Method::SplitStepSpectral && phase >= std::f64::consts::PI {
                        out.push(format!("propagator: dt*max|V|/hbar = {phase:.3} must stay below pi"));
                    }
                }
                Err(e) => out.push(format!("potential: {e}")),
            }
            out.extend(self.initial_violations(g));
        }
        out.extend(self.analysis_violations());
        out
    }

    fn initial_violations(&self, grid: &Grid) -> Vec<String> {
        let mut out = Vec::new();
        let packet = |label: &str, p: &GaussianPacket, on: &Grid| -> Vec<String> {
            let v = p.violations(on);
            let mut msgs: Vec<String> = v.iter().map(|v| format!("{label}: {v}")).collect();
            if v.is_empty() {
                let mass = p.tail_mass(on);
                if mass > BOUNDARY_TAIL_LIMIT {
                    msgs.push(format!("{label}: {mass:.2e} of the packet lies outside the grid (limit {BOUNDARY_TAIL_LIMIT:.0e})"));
                }
            }
            msgs
        };
        match &self.initial {
            InitialState::Gaussian { center, sigma, momentum } => {
                out.extend(packet("initial", &GaussianPacket::new(center.clone(), sigma.clone(), momentum.clone()), grid))
            }
            InitialState::GroundState { center, sigma } => {
                out.extend(packet("initial", &GaussianPacket::new(center.clone(), sigma.clone(), vec![]), grid));
                if grid.dim() != 1 || grid.boundary() != Boundary::Dirichlet {
                    out.push("initial: ground-state needs a one-dimensional dirichlet grid".into());
                }
            }
            InitialState::Superposition { components } => {
                if components.is_empty() {
                    out.push("initial: superposition needs at least one component".into());
                }
                for (i, c) in components.iter().enumerate() {
                    out.extend(packet(&format!("initial.components[{i}]"), &c.packet(), grid));
                }
            }
            InitialState::Spinor { up, down, .. } => {
                out.extend(packet("initial.up", up, grid));
                out.extend(packet("initial.down", down, grid));
            }
            InitialState::TwoParticle { first, second, .. } => {
                if grid.dim() != 2 {
                    out.push("initial: two-particle states need a 2D grid".into());
                } else {
                    // each factor occupies both axes, once per exchange term
                    for (label, p) in [("initial.first", first), ("initial.second", second)] {
                        for axis in 0..2 {
                            let line = GridSpec::new(vec![grid.axis(axis).clone()]).with_boundary(grid.boundary());
                            if let Ok(g) = Grid::new(line) {
                                out.extend(packet(&format!("{label} on axis {axis}"), p, &g));
                            }
                        }
                    }
                }
            }
            InitialState::PointerBranches { .. } => {}
        }
        out
    }

    fn analysis_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let dim = self.grid.axes.len();
        let mode = self.mode();
        let h = self.propagator.frame_interval();
        let frames = self.propagator.frame_count();
        let frame_of = |t: f64| -> Option<usize> {
            let s = t / h;
            let i = s.round();
            ((s - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < frames).then_some(i as usize)
        };
        if self.analysis.is_empty() {
            out.push("analysis: at least one analysis is required".into());
        }
        for (n, a) in self.analysis.iter().enumerate() {
            let label = format!("analysis[{n}] ({})", a.name());
            let mut bad = |msg: String| out.push(format!("{label}: {msg}"));
            match mode {
                Mode::Measurement if !matches!(a, Analysis::Measurement { .. }) => {
                    bad("pointer-branches scenarios support only the measurement analysis".into())
                }
                Mode::Spinor if !matches!(a, Analysis::VelocityField) => {
                    bad("spinor scenarios support only the velocity-field analysis".into())
                }
                Mode::Pipeline if matches!(a, Analysis::Measurement { .. }) => {
                    bad("measurement needs a pointer-branches initial state".into())
                }
                _ => {}
            }
            if a.needs_trajectories() && self.ensemble.is_none() {
                bad("needs an [ensemble] section".into());
            }
            match a {
                Analysis::Equivariance { checkpoints, ks_tolerance, .. } => {
                    if checkpoints.is_empty() {
                        bad("checkpoints must not be empty".into());
                    }
                    for t in checkpoints {
                        if frame_of(*t).is_none() {
                            bad(format!("checkpoint {t} is not a stored frame time (multiples of {h} up to {})", self.propagator.total_time));
                        }
                    }
                    if let Some(tol) = ks_tolerance {
                        if !(*tol > 0.0 && *tol < 1.0) {
                            bad("ks_tolerance must lie in (0, 1)".into());
                        }
                    }
                }
                Analysis::NonCrossing => {
                    if dim != 1 {
                        bad("non-crossing is defined for one-dimensional grids".into());
                    }
                }
                Analysis::Unitarity { tolerance } => {
                    if !(*tolerance > 0.0) {
                        bad("tolerance must be positive".into());
                    }
                }
                Analysis::Polar { checkpoints, energy_tolerance, region, hj_tolerance, .. } => {
                    if checkpoints.is_empty() {
                        bad("checkpoints must not be empty".into());
                    }
                    for t in checkpoints {
                        match frame_of(*t) {
                            None => bad(format!("checkpoint {t} is not a stored frame time")),
                            Some(i) if hj_tolerance.is_some() && (i == 0 || i + 1 >= frames) => {
                                bad(format!("checkpoint {t} is not interior; the Hamilton-Jacobi residual needs neighbouring frames"))
                            }
                            _ => {}
                        }
                    }
                    if !(*energy_tolerance > 0.0) {
                        bad("energy_tolerance must be positive".into());
                    }
                    if let Some([lo, hi]) = region {
                        if !(lo < hi) {
                            bad("region must be [lower, upper] with lower < upper".into());
                        }
                    }
                }
                Analysis::ClassicalLimit { scale_factors } => {
                    if !matches!(self.initial, InitialState::Gaussian { .. }) {
                        bad("classical-limit needs a gaussian initial state".into());
                    }
                    if scale_factors.len() < 2 || scale_factors.iter().any(|s| !(*s > 0.0)) {
                        bad("scale_factors needs at least two positive entries".into());
                    }
                    if self.ensemble.is_none() {
                        bad("needs an [ensemble] section for base_dt".into());
                    }
                }
                Analysis::Measurement { interaction_time, drift_time, .. } => {
                    let total = interaction_time + drift_time;
                    if (total - self.propagator.total_time).abs() > 1e-9 * total.max(1.0) {
                        bad(format!(
                            "interaction_time + drift_time = {total} must equal propagator.total_time = {}",
                            self.propagator.total_time
                        ));
                    }
                    if !matches!(self.potential, PotentialSource::Inline(PotentialKind::Bilinear { .. })) {
                        bad("measurement needs a bilinear potential (the coupling)".into());
                    }
                    if self.ensemble.is_none() {
                        bad("needs an [ensemble] section".into());
                    }
                    if let Some(spec) = self.pointer_experiment() {
                        out.extend(spec.violations().into_iter().map(|v| format!("{label}: {v}")));
                    }
                }
                Analysis::Nonlocality { partner, min_spread, max_spread, .. } => {
                    if dim != 2 {
                        bad("nonlocality needs a two-axis configuration space".into());
                    }
                    if partner.len() < 2 {
                        bad("partner needs at least two positions".into());
                    }
                    if min_spread.is_none() && max_spread.is_none() {
                        bad("set min_spread or max_spread".into());
                    }
                }
                Analysis::VelocityField => {}
            }
        }
        out
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Parse and validate config text. Syntax and type errors carry their line
/// and column; semantic problems are all reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_in(text, None)
}

fn parse_config_in(text: &str, base_dir: Option<PathBuf>) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                Error::Config(vec![format!("line {line}, column {col}: {msg}")])
            }
            None => Error::Config(vec![msg]),
        }
    })?;
    let mut missing = Vec::new();
    let mut need = |name: &str, present: bool| {
        if !present {
            missing.push(format!("{name}: required field is missing"));
        }
    };
    need("name", raw.name.is_some());
    need("seed", raw.seed.is_some());
    need("grid", raw.grid.is_some());
    need("initial", raw.initial.is_some());
    need("propagator", raw.propagator.is_some());
    let (Some(name), Some(seed), Some(grid), Some(initial), Some(propagator)) =
        (raw.name, raw.seed, raw.grid, raw.initial, raw.propagator)
    else {
        return Err(Error::Config(missing));
    };
    let config = ScenarioConfig {
        name,
        description: raw.description,
        seed,
        output_dir: raw.output_dir,
        plot_paths: raw.plot_paths,
        grid,
        params: raw.params.unwrap_or(ParamsConfig { hbar: 1.0, masses: None }),
        potential: raw.potential,
        initial,
        propagator,
        ensemble: raw.ensemble,
        analysis: raw.analysis,
        base_dir,
    };
    let problems = config.violations();
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(problems))
    }
}

/// Read and validate a config file; relative paths inside it resolve
/// against its directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
    let base = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    parse_config_in(&text, Some(base))
}

/// Canonical text: every default filled in, fixed key order.
pub fn canonicalize(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario configs serialize to TOML")
}
