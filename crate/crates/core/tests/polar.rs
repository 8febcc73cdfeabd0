mod common;

use std::sync::Arc;

use common::{dirichlet_line, free_gaussian, free_series, harmonic_ground, line};
use pilot_wave::ensemble::{integrate_trajectory, EnsembleSpec};
use pilot_wave::grid::GridSpec;
use pilot_wave::guidance::{velocity_grid, NodePolicy};
use pilot_wave::polar::{
    classical_limit_study, classical_trajectory, hj_residual, polar_decompose, quantum_force, quantum_potential,
    second_order_trajectory, ClassicalLimitSpec,
};
use pilot_wave::potential::{Potential, PotentialKind};
use pilot_wave::propagator::{discrete_ground_state, evolve, FrameSeries, Method, PropagatorSpec};
use pilot_wave::state::{init_gaussian, plane_wave, PhysicalParams, WaveFunction};
use pilot_wave::C64;

fn still(psi: &WaveFunction, v: Potential) -> FrameSeries {
    FrameSeries::from_frames(vec![psi.clone()], Arc::new(v), PropagatorSpec::split_step(1e-3, 0.0, 1)).unwrap()
}

/// Independent second-difference evaluation of −½R''/R (ℏ = m = 1).
fn fd_quantum_potential(r: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3;
    -0.5 * (r(x + h) - 2.0 * r(x) + r(x - h)) / (h * h) / r(x)
}

#[test]
fn boosted_packet_has_phase_gradient_k() {
    let psi = init_gaussian(line(-8.0, 8.0, 128), PhysicalParams::natural(1), &[0.0], &[1.0], &[1.7]).unwrap();
    let p = polar_decompose(&psi).unwrap();
    let dx = psi.grid().dx()[0];
    let grad = (p.s[65] - p.s[63]) / (2.0 * dx);
    assert!((grad - 1.7).abs() < 1e-6);
    let back = p.reconstruct();
    assert!(back.iter().zip(psi.amplitudes()).zip(&p.mask).all(|((a, b), m)| !m || (a - b).norm() < 1e-12));
}

#[test]
fn static_gaussian_quantum_potential() {
    let psi = init_gaussian(line(-16.0, 16.0, 256), PhysicalParams::natural(1), &[0.0], &[1.0], &[0.0]).unwrap();
    let u = quantum_potential(&psi).unwrap();
    let g = psi.grid();
    let centre = g.len() / 2;
    assert_eq!(g.coords(0)[centre], 0.0);
    let r = |x: f64| (-x * x / 4.0).exp();
    let oracle = fd_quantum_potential(r, 0.0);
    assert!((u[centre] - 0.25).abs() < 1e-4);
    assert!((u[centre] - oracle).abs() < 1e-4);
    for j in (centre - 16..centre + 16).step_by(4) {
        let x = g.coords(0)[j];
        assert!((u[j] - (0.25 - x * x / 8.0)).abs() < 1e-6);
    }
    let plane = plane_wave(line(0.0, std::f64::consts::TAU, 64), PhysicalParams::natural(1), &[3.0]).unwrap();
    assert!(quantum_potential(&plane).unwrap().iter().all(|u| u.abs() < 1e-8));
}

#[test]
fn harmonic_ground_state_is_stationary_in_hj_sense() {
    let (psi, v) = harmonic_ground(line(-16.0, 16.0, 256), 1.0);
    let u = quantum_potential(&psi).unwrap();
    let g = psi.grid();
    for j in 0..g.len() {
        let x = g.coords(0)[j];
        if x.abs() < 3.0 {
            assert!((v.values()[j] + u[j] - 0.5).abs() < 1e-6);
        }
    }
}

#[test]
fn quantum_force_oracles() {
    let params = PhysicalParams::natural(1);
    let psi = init_gaussian(line(-16.0, 16.0, 256), params.clone(), &[0.0], &[1.0], &[0.0]).unwrap();
    let series = still(&psi, Potential::free(psi.grid().clone()));
    let f = quantum_force(&series, 0.0, &[1.0]).unwrap();
    assert!((f[0] - 0.25).abs() < 1e-3, "{}", f[0]);

    let plane = plane_wave(line(0.0, std::f64::consts::TAU, 64), params.clone(), &[3.0]).unwrap();
    let series = still(&plane, Potential::free(plane.grid().clone()));
    assert!(quantum_force(&series, 0.0, &[1.234]).unwrap()[0].abs() < 1e-8);

    let (ground, v) = harmonic_ground(line(-8.0, 8.0, 512), 1.0);
    let series = still(&ground, v);
    for x in [-1.9, -1.0, -0.3, 0.0, 0.77, 1.5, 1.99] {
        let fq = quantum_force(&series, 0.0, &[x]).unwrap()[0];
        assert!((fq - x).abs() < 1e-4, "x = {x}: {fq}");
    }
}

#[test]
fn hj_residual_of_plane_wave_and_ground_state() {
    let params = PhysicalParams::natural(1);
    let plane = plane_wave(line(0.0, std::f64::consts::TAU, 64), params.clone(), &[3.0]).unwrap();
    // e^{i(kx − ωt)} with ω = k²/2
    let frames = (0..11).map(|i| plane.scaled(C64::from_polar(1.0, -4.5 * 0.01 * i as f64)).with_time(0.01 * i as f64)).collect();
    let free = Arc::new(Potential::free(plane.grid().clone()));
    let series = FrameSeries::from_frames(frames, free, PropagatorSpec::split_step(1e-3, 0.1, 10)).unwrap();
    let r = hj_residual(&series, 0.05).unwrap();
    assert!(r.iter().all(|x| x.abs() < 1e-8), "{:?}", r.iter().fold(0.0f64, |m, x| m.max(x.abs())));

    let (guess, v) = harmonic_ground(dirichlet_line(-10.0, 10.0, 256), 1.0);
    let (ground, _) = discrete_ground_state(&guess, &v).unwrap();
    let series = evolve(&ground, &v, &PropagatorSpec::new(Method::CrankNicolson1d, 1e-3, 0.1, 10)).unwrap();
    let r = hj_residual(&series, 0.05).unwrap();
    let g = series.grid();
    for j in 0..g.len() {
        if g.coords(0)[j].abs() < 3.0 {
            assert!(r[j].abs() < 1e-6, "x = {}: {}", g.coords(0)[j], r[j]);
        }
    }
}

fn free_hj_max(n: usize, dt: f64, stride: usize) -> f64 {
    let psi = init_gaussian(line(-16.0, 16.0, n), PhysicalParams::natural(1), &[0.0], &[1.0], &[0.0]).unwrap();
    let series = evolve(&psi, &Potential::free(psi.grid().clone()), &PropagatorSpec::split_step(dt, 1.0, stride)).unwrap();
    hj_residual(&series, 0.5).unwrap().iter().filter(|x| !x.is_nan()).fold(0.0, |m: f64, x| m.max(x.abs()))
}

#[test]
fn hj_residual_converges_at_second_order() {
    let coarse = free_hj_max(256, 1e-3, 10);
    let fine = free_hj_max(512, 5e-4, 10);
    assert!(coarse < 1e-2, "{coarse}");
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio} ({coarse} -> {fine})");
}

#[test]
fn second_order_paths() {
    let (psi, v) = harmonic_ground(line(-8.0, 8.0, 512), 1.0);
    let series = evolve(&psi, &v, &PropagatorSpec::split_step(1e-3, 1.0, 10)).unwrap();
    let path = second_order_trajectory(&series, &[0.8], None, 1e-3).unwrap();
    let drift = path.positions.iter().map(|q| (q[0] - 0.8).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "{drift}");

    let psi = free_gaussian();
    let series = free_series(&psi, 2.0);
    let first = integrate_trajectory(&series, &[1.0], &EnsembleSpec::new(1, 0, 0.01)).unwrap();
    let first: Vec<Vec<f64>> = (0..first.len()).map(|i| first.position(i).to_vec()).collect();
    let second = second_order_trajectory(&series, &[1.0], None, 0.01).unwrap();
    assert!(second.max_deviation(&first) < 1e-3, "{}", second.max_deviation(&first));
    let wrong = second_order_trajectory(&series, &[1.0], Some(&[0.5]), 0.01).unwrap();
    assert!(wrong.max_deviation(&first) > 0.1);
}

#[test]
fn newtonian_oracles() {
    let params = PhysicalParams::natural(1);
    let g = line(-16.0, 16.0, 256);
    let v = Potential::new(PotentialKind::Harmonic { omega: vec![1.0] }, g.clone(), &params).unwrap();
    let path = classical_trajectory(&v, &[1.0], &[0.0], &params, 10.0, 1e-3).unwrap();
    for (t, q) in path.times.iter().zip(&path.positions).step_by(250) {
        assert!((q[0] - t.cos()).abs() < 1e-6);
    }
    let e = path.energies(&v, &params).unwrap();
    assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-8));

    let free = classical_trajectory(&Potential::free(g), &[-3.0], &[1.5], &params, 4.0, 1e-2).unwrap();
    for (t, q) in free.times.iter().zip(&free.positions) {
        assert!((q[0] - (-3.0 + 1.5 * t)).abs() < 1e-10);
    }
}

fn ladder(potential: PotentialKind, sigma: f64, velocity: f64, scales: Vec<f64>) -> ClassicalLimitSpec {
    ClassicalLimitSpec {
        grid: GridSpec::cube(1, -16.0, 16.0, 1024),
        params: PhysicalParams::natural(1),
        potential,
        center: vec![-4.0],
        sigma: vec![sigma],
        velocity: vec![velocity],
        propagator: PropagatorSpec::split_step(1e-3, 2.0, 10),
        base_dt: 0.01,
        scale_factors: scales,
    }
}

#[test]
fn free_packet_centre_is_classical_at_every_scale() {
    let table = classical_limit_study(&ladder(PotentialKind::Free, 1.0, 1.5, vec![1.0, 10.0])).unwrap();
    for row in &table.rows {
        assert!(row.max_deviation < 1e-3, "{row:?}");
        assert!(row.max_force_ratio.is_none());
    }
}

#[test]
fn narrow_light_packet_is_quantum() {
    let barrier = PotentialKind::Barrier { height: 1.0, width: 1.0, center: 0.0 };
    let mut spec = ladder(barrier, 0.3, 1.0, vec![1.0]);
    spec.propagator.total_time = 1.0;
    let table = classical_limit_study(&spec).unwrap();
    assert!(table.rows[0].max_force_ratio.unwrap() > 0.1);
}

#[test]
fn harmonic_packet_centre_is_classical_at_every_scale() {
    let mut spec = ladder(PotentialKind::Harmonic { omega: vec![1.0] }, 1.0, 0.0, vec![1.0, 100.0]);
    // coherent packet at unit mass; the heavier packet squeezes to σ ≈ 0.007
    spec.grid = GridSpec::cube(1, -7.0, 7.0, 2048);
    spec.center = vec![1.5];
    spec.sigma = vec![0.5f64.sqrt()];
    spec.propagator.dt = 5e-4;
    spec.propagator.frame_stride = 1;
    spec.propagator.total_time = 1.5;
    spec.base_dt = 1e-3;
    let table = classical_limit_study(&spec).unwrap();
    // the centre of a symmetric packet in a quadratic well feels no quantum force
    for row in &table.rows {
        assert!(row.max_deviation < 1e-4, "{row:?}");
    }
}

#[test]
fn barrier_ladder_deviation_shrinks_with_mass() {
    let barrier = PotentialKind::Barrier { height: 1.0, width: 1.0, center: 0.0 };
    let mut spec = ladder(barrier, 1.0, 2.0, vec![1.0, 10.0, 100.0]);
    spec.grid = GridSpec::cube(1, -16.0, 16.0, 4096);
    spec.center = vec![-5.0];
    spec.propagator.total_time = 4.0;
    let table = classical_limit_study(&spec).unwrap();
    assert!(table.strictly_decreasing(), "{table:?}");
}

fn evolved_packet(k: f64, sigma: f64, n: usize, dt: f64, t: f64) -> FrameSeries {
    let psi = init_gaussian(line(-16.0, 16.0, n), PhysicalParams::natural(1), &[-1.0], &[sigma], &[k]).unwrap();
    evolve(&psi, &Potential::free(psi.grid().clone()), &PropagatorSpec::split_step(dt, t, 10)).unwrap()
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(8))]
    #[test]
    fn velocity_is_phase_gradient_over_mass(k in -2.0f64..2.0, sigma in 0.8f64..1.5) {
        let series = evolved_packet(k, sigma, 256, 1e-3, 0.5);
        let psi = series.frame(series.len() - 1).unwrap().into_owned();
        let p = polar_decompose(&psi).unwrap();
        let v = velocity_grid(&psi, &NodePolicy::default()).unwrap();
        let peak = p.r.iter().fold(0.0f64, |m, r| m.max(*r));
        let dx = psi.grid().dx()[0];
        // a free Gaussian has quadratic phase, which central differences resolve exactly
        for j in 1..psi.grid().len() - 1 {
            if p.r[j] > 0.03 * peak {
                let grad = (p.s[j + 1] - p.s[j - 1]) / (2.0 * dx);
                proptest::prop_assert!((grad - v.components[0][j]).abs() < 1e-8, "{} vs {}", grad, v.components[0][j]);
            }
        }
    }
}

/// Max |∂ₜR² + ∂ₓ(R²∂ₓS/m)| over the bulk, by centred differences of the polar fields.
fn polar_continuity_residual(n: usize, dt: f64) -> f64 {
    let series = evolved_packet(1.0, 1.0, n, dt, 0.5);
    let i = series.len() / 2;
    let fields: Vec<_> = (i - 1..=i + 1).map(|j| polar_decompose(&series.frame(j).unwrap()).unwrap()).collect();
    let h = series.frame_interval();
    let dx = series.grid().dx()[0];
    let mid = &fields[1];
    let flux: Vec<f64> = (0..n)
        .map(|j| {
            let (l, r) = ((j + n - 1) % n, (j + 1) % n);
            mid.r[j] * mid.r[j] * (mid.s[r] - mid.s[l]) / (2.0 * dx)
        })
        .collect();
    let peak = mid.r.iter().fold(0.0f64, |m, r| m.max(*r));
    (2..n - 2)
        .filter(|&j| mid.r[j] > 0.01 * peak)
        .map(|j| {
            let drho = (fields[2].r[j].powi(2) - fields[0].r[j].powi(2)) / (2.0 * h);
            (drho + (flux[j + 1] - flux[j - 1]) / (2.0 * dx)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn amplitude_squared_obeys_continuity_at_second_order() {
    let coarse = polar_continuity_residual(256, 1e-3);
    let fine = polar_continuity_residual(512, 5e-4);
    assert!(coarse < 1e-2, "{coarse}");
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "{ratio}: {coarse} -> {fine}");
}
