#![allow(dead_code)]

use std::sync::Arc;

use pilot_wave::grid::{make_grid, Boundary, Grid, GridSpec};
use pilot_wave::potential::{Potential, PotentialKind};
use pilot_wave::propagator::{evolve, FrameSeries, PropagatorSpec};
use pilot_wave::state::{init_gaussian, PhysicalParams, WaveFunction};

pub fn line(lower: f64, upper: f64, n: usize) -> Arc<Grid> {
    Arc::new(make_grid(GridSpec::cube(1, lower, upper, n)).unwrap())
}

pub fn dirichlet_line(lower: f64, upper: f64, n: usize) -> Arc<Grid> {
    Arc::new(make_grid(GridSpec::cube(1, lower, upper, n).with_boundary(Boundary::Dirichlet)).unwrap())
}

/// σ0 = 1 packet at rest on [−16, 16) with 256 points.
pub fn free_gaussian() -> WaveFunction {
    init_gaussian(line(-16.0, 16.0, 256), PhysicalParams::natural(1), &[0.0], &[1.0], &[0.0]).unwrap()
}

pub fn free_series(psi: &WaveFunction, total_time: f64) -> FrameSeries {
    let spec = PropagatorSpec::split_step(1e-3, total_time, 10);
    evolve(psi, &Potential::free(psi.grid().clone()), &spec).unwrap()
}

/// Width of a free packet: σ(t) = σ0·√(1 + (ℏt / 2mσ0²)²).
pub fn spread(sigma0: f64, t: f64) -> f64 {
    sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt()
}

pub fn harmonic_ground(grid: Arc<Grid>, omega: f64) -> (WaveFunction, Potential) {
    let params = PhysicalParams::natural(1);
    // ground state exp(−mωx²/2ℏ) has σ = 1/√(2mω)
    let sigma = 1.0 / (2.0 * omega).sqrt();
    let psi = init_gaussian(grid.clone(), params.clone(), &[0.0], &[sigma], &[0.0]).unwrap();
    let v = Potential::new(PotentialKind::Harmonic { omega: vec![omega] }, grid, &params).unwrap();
    (psi, v)
}

/// Phase-insensitive L² distance between normalized states.
pub fn phase_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let s = a.inner(b).unwrap().norm() / (a.norm() * b.norm());
    (2.0 - 2.0 * s.min(1.0)).max(0.0).sqrt()
}

/// Two system packets at x = ±3.5 read by a pointer on y.
pub fn pointer_spec(weights: &[f64], runs: usize) -> pilot_wave::measurement::PointerExperimentSpec {
    use pilot_wave::grid::AxisSpec;
    use pilot_wave::measurement::{BranchSpec, PointerExperimentSpec, PointerSpec};
    let centres = [3.5, -3.5];
    PointerExperimentSpec {
        grid: GridSpec::new(vec![AxisSpec::new(-8.0, 8.0, 256), AxisSpec::new(-16.0, 16.0, 256)]),
        params: PhysicalParams::new(1.0, vec![20.0, 5.0]).unwrap(),
        branches: weights
            .iter()
            .zip(centres)
            .map(|(&weight, center)| BranchSpec { weight, phase: 0.0, center, sigma: 0.25, momentum: 0.0 })
            .collect(),
        pointer: PointerSpec { center: 0.0, sigma: 0.5 },
        coupling: 8.0,
        interaction_time: 0.5,
        drift_time: 1.5,
        dt: 1e-3,
        frame_stride: 5,
        ensemble: pilot_wave::ensemble::EnsembleSpec::new(runs, 7, 0.005),
        region_boundaries: None,
        overlap_threshold: 1e-6,
    }
}
