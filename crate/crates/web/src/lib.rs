//! Browser demo: a packet meeting a barrier, with Bohmian paths and a
//! pointwise probe of the guiding velocity and quantum potential.

use std::sync::Arc;

use pilot_wave::ensemble::{integrate_ensemble, sample_equilibrium, EnsembleSpec};
use pilot_wave::grid::{make_grid, GridSpec};
use pilot_wave::guidance::{velocity_at, NodePolicy};
use pilot_wave::polar::quantum_potential;
use pilot_wave::potential::{Potential, PotentialKind};
use pilot_wave::propagator::{evolve_shared, FrameSeries, PropagatorSpec};
use pilot_wave::state::{init_gaussian, PhysicalParams};
use wasm_bindgen::prelude::*;

const LOWER: f64 = -24.0;
const UPPER: f64 = 24.0;
const POINTS: usize = 512;
const START: f64 = -6.0;
const SIGMA: f64 = 1.0;
const BARRIER_WIDTH: f64 = 0.5;
const DT: f64 = 2e-3;
const STRIDE: usize = 10;

fn js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub struct Tunneling {
    series: FrameSeries,
}

#[wasm_bindgen]
impl Tunneling {
    /// Evolve a packet with mean momentum `momentum` against a Gaussian
    /// barrier of height `height` at the origin, up to `total_time`.
    #[wasm_bindgen(constructor)]
    pub fn new(height: f64, momentum: f64, total_time: f64) -> Result<Tunneling, JsValue> {
        let grid = Arc::new(make_grid(GridSpec::cube(1, LOWER, UPPER, POINTS)).map_err(js)?);
        let params = PhysicalParams::natural(1);
        let psi = init_gaussian(grid.clone(), params.clone(), &[START], &[SIGMA], &[momentum]).map_err(js)?;
        let kind = PotentialKind::Barrier { height, width: BARRIER_WIDTH, center: 0.0 };
        let potential = Arc::new(Potential::new(kind, grid, &params).map_err(js)?);
        let spec = PropagatorSpec::split_step(DT, total_time, STRIDE);
        let series = evolve_shared(&psi, potential, &spec).map_err(js)?;
        Ok(Tunneling { series })
    }

    pub fn points(&self) -> usize {
        POINTS
    }

    pub fn frames(&self) -> usize {
        self.series.len()
    }

    pub fn lower(&self) -> f64 {
        LOWER
    }

    pub fn upper(&self) -> f64 {
        UPPER
    }

    pub fn end_time(&self) -> f64 {
        self.series.end()
    }

    /// `|ψ|²` for every frame, `frames × points`, row per frame.
    pub fn density(&self) -> Result<Vec<f64>, JsValue> {
        let mut out = Vec::with_capacity(self.series.len() * POINTS);
        for i in 0..self.series.len() {
            out.extend(self.series.frame(i).map_err(js)?.density());
        }
        Ok(out)
    }

    /// Potential values on the grid.
    pub fn potential(&self) -> Vec<f64> {
        self.series.potential_at(0).values().to_vec()
    }

    /// Sample `n` starting points from `|ψ₀|²` and integrate them; returns
    /// `n × frames` positions, NaN after a path stops.
    pub fn trajectories(&self, n: usize, seed: u64) -> Result<Vec<f64>, JsValue> {
        let psi = self.series.frame(0).map_err(js)?;
        let points = sample_equilibrium(&psi, n, seed).map_err(js)?;
        let spec = EnsembleSpec::new(n, seed, 0.01);
        let set = integrate_ensemble(&self.series, &points, &spec).map_err(js)?;
        let grid = self.series.grid();
        let mut out = Vec::with_capacity(n * self.series.len());
        for path in &set.paths {
            for i in 0..path.len() {
                out.push(path.unwrapped(i, grid)[0]);
            }
        }
        Ok(out)
    }

    /// Guiding velocity and quantum potential at `(x, t)`; `[v, U]`, NaN at a node.
    pub fn probe(&self, x: f64, t: f64) -> Result<Vec<f64>, JsValue> {
        let t = t.clamp(self.series.start(), self.series.end());
        let v = velocity_at(&self.series, t, &[x], &NodePolicy::default()).map(|v| v[0]).unwrap_or(f64::NAN);
        let i = (((t - self.series.start()) / self.series.frame_interval()).round() as usize).min(self.series.len() - 1);
        let u = quantum_potential(&*self.series.frame(i).map_err(js)?).map_err(js)?;
        let dx = (UPPER - LOWER) / POINTS as f64;
        let j = (((x - LOWER) / dx).round() as usize).min(POINTS - 1);
        Ok(vec![v, u[j]])
    }
}
