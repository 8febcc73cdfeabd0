mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{free_gaussian, free_series, line, spread};
use pilot_wave::fieldio::{read_manifest, read_real_record, FieldKind};
use pilot_wave::grid::{make_grid, GridSpec};
use pilot_wave::guidance::{
    continuity_residual, current_grid, nonlocality_probe, velocity_at, velocity_grid, velocity_of_state, write_current,
    NodePolicy,
};
use pilot_wave::state::{init_gaussian, plane_wave, superpose, tensor_product, PhysicalParams, WaveFunction};
use pilot_wave::C64;
use proptest::prelude::*;

fn policy() -> NodePolicy {
    NodePolicy::default()
}

#[test]
fn spreading_gaussian_velocity_is_linear_in_x() {
    let psi = free_gaussian();
    let series = free_series(&psi, 1.0);
    let t = 1.0;
    let frame = series.frame(series.frame_index(t).unwrap()).unwrap();
    let v = velocity_grid(&frame, &policy()).unwrap();
    let sigma = spread(1.0, t);
    // σ̇/σ = (t/4)/σ² for σ0 = 1
    let rate = t / 4.0 / (sigma * sigma);
    let g = series.grid();
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for j in 0..g.len() {
        let x = g.coord_of(j, 0);
        if x.abs() <= 3.0 * sigma {
            err = err.max((v.components[0][j] - rate * x).abs());
            scale = scale.max((rate * x).abs());
        }
    }
    assert!(err / scale < 1e-3, "{}", err / scale);
}

#[test]
fn off_grid_evaluation_is_consistent() {
    let psi = free_gaussian();
    let series = free_series(&psi, 0.5);
    let i = 20;
    let t = series.times()[i];
    let frame = series.frame(i).unwrap();
    let grid_v = velocity_grid(&frame, &policy()).unwrap();
    for j in [100, 128, 150] {
        let q = series.grid().point_of(j);
        let v = velocity_at(&series, t, &q, &policy()).unwrap();
        assert!((v[0] - grid_v.components[0][j]).abs() < 1e-12);
    }
}

#[test]
fn plane_wave_off_grid_velocity() {
    let g = line(0.0, 2.0 * PI, 64);
    let psi = plane_wave(g, PhysicalParams::natural(1), &[5.0]).unwrap();
    for q in [0.123, 1.7777, 5.9] {
        let v = velocity_of_state(&psi, &[q], &policy()).unwrap();
        assert!((v[0] - 5.0).abs() < 1e-8);
    }
}

#[test]
fn scaling_leaves_velocity_unchanged() {
    let psi = init_gaussian(line(-8.0, 8.0, 128), PhysicalParams::natural(1), &[0.3], &[1.0], &[1.2]).unwrap();
    let doubled = psi.scaled(C64::new(2.0, 0.0));
    for q in [-1.3, 0.0, 0.77, 2.4] {
        let a = velocity_of_state(&psi, &[q], &policy()).unwrap()[0];
        let b = velocity_of_state(&doubled, &[q], &policy()).unwrap()[0];
        assert!((a - b).abs() < 1e-14);
    }
}

/// Smooth, nodeless, non-trivially phased test state.
fn smooth_state(c: &[f64; 4]) -> WaveFunction {
    let g = line(-8.0, 8.0, 128);
    WaveFunction::from_fn(g, PhysicalParams::natural(1), |q| {
        let x = q[0];
        let r = (-(x - c[0]).powi(2) / 4.0).exp() * (1.0 + 0.3 * (c[1] * x).cos().powi(2));
        C64::from_polar(r, c[2] * x + c[3] * (0.5 * x).sin())
    })
    .unwrap()
}

#[test]
fn current_equals_density_times_velocity() {
    let psi = smooth_state(&[0.4, 1.3, 0.7, 2.0]);
    let v = velocity_grid(&psi, &policy()).unwrap();
    let j = current_grid(&psi);
    let rho = psi.density();
    for i in 0..rho.len() {
        if v.mask[i] {
            assert!((j[0][i] - rho[i] * v.components[0][i]).abs() < 1e-10);
        }
    }
}

#[test]
fn galilei_boost_shifts_velocity() {
    let psi = init_gaussian(line(-16.0, 16.0, 256), PhysicalParams::natural(1), &[0.0], &[1.0], &[0.5]).unwrap();
    // u must be a grid mode on the periodic box: u = 2π·8/32
    let u = 2.0 * PI * 8.0 / 32.0;
    let boosted = psi.with_phase(|q| u * q[0]);
    let a = velocity_grid(&psi, &policy()).unwrap();
    let b = velocity_grid(&boosted, &policy()).unwrap();
    let rho = psi.density();
    let peak = rho.iter().cloned().fold(0.0, f64::max);
    for i in 0..rho.len() {
        if rho[i] > 1e-6 * peak {
            assert!((b.components[0][i] - a.components[0][i] - u).abs() < 1e-10);
        }
    }
}

#[test]
fn continuity_residual_small_on_free_gaussian() {
    let psi = free_gaussian();
    let series = free_series(&psi, 1.0);
    for i in [1, 50, 99] {
        let r = continuity_residual(&series, i).unwrap();
        let worst = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(worst < 1e-4, "frame {i}: {worst}");
    }
}

fn two_packets() -> (WaveFunction, WaveFunction, WaveFunction, WaveFunction) {
    let g = line(-8.0, 8.0, 128);
    let p = PhysicalParams::natural(1);
    let a = init_gaussian(g.clone(), p.clone(), &[2.0], &[0.5], &[1.0]).unwrap();
    let b = init_gaussian(g, p, &[-2.0], &[0.5], &[-1.0]).unwrap();
    let ab = tensor_product(&[&a, &b]).unwrap();
    let ba = tensor_product(&[&b, &a]).unwrap();
    (a, b, ab, ba)
}

#[test]
fn entangled_pair_velocity_depends_on_partner() {
    let (_, _, ab, ba) = two_packets();
    let sym = superpose(&ab, &ba, C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap().state;
    let q2: Vec<f64> = (0..11).map(|i| -2.5 + 0.5 * i as f64).collect();
    let probe = nonlocality_probe(&sym, 0.0, &q2, &policy()).unwrap();
    assert!(probe.spread > 0.1, "{}", probe.spread);
    let lone = superpose(&ab, &ba, C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap().state;
    let q2: Vec<f64> = (0..11).map(|i| -3.0 + 0.2 * i as f64).collect();
    let probe = nonlocality_probe(&lone, 1.5, &q2, &policy()).unwrap();
    assert!(probe.spread < 1e-10, "{}", probe.spread);
}

#[test]
fn current_export_is_a_real_vector_field() {
    let dir = tempfile::tempdir().unwrap();
    let g = Arc::new(make_grid(GridSpec::cube(2, -8.0, 8.0, 64)).unwrap());
    let psi = init_gaussian(g, PhysicalParams::natural(2), &[0.0, 0.0], &[1.0, 1.0], &[1.0, 0.0]).unwrap();
    write_current(dir.path(), &psi).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.kind, FieldKind::RealVector);
    assert_eq!(m.component_names, vec!["j0", "j1"]);
    let rec = read_real_record(dir.path(), &m, 0).unwrap();
    assert_eq!(rec, current_grid(&psi));
    let vdir = dir.path().join("v");
    velocity_grid(&psi, &policy()).unwrap().write_dir(&vdir, psi.params(), 0.0).unwrap();
    let rec = read_real_record(&vdir, &read_manifest(&vdir).unwrap(), 0).unwrap();
    assert!(rec[0].iter().any(|x| x.is_nan()) || rec[0].iter().all(|x| x.is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn global_phase_leaves_fields_unchanged(alpha in 0.0..(2.0 * PI), c1 in 0.5..2.0f64, c2 in -2.0..2.0f64) {
        let psi = smooth_state(&[0.0, c1, c2, 0.5]);
        let rotated = psi.scaled(C64::from_polar(1.0, alpha));
        let (a, b) = (velocity_grid(&psi, &policy()).unwrap(), velocity_grid(&rotated, &policy()).unwrap());
        let (ja, jb) = (current_grid(&psi), current_grid(&rotated));
        let rho = psi.density();
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        for i in 0..rho.len() {
            prop_assert!((ja[0][i] - jb[0][i]).abs() < 1e-14);
            // FFT round-off in v grows like 1/|ψ| towards the tails
            if rho[i] > 1e-1 * peak {
                let d = (a.components[0][i] - b.components[0][i]).abs();
                prop_assert!(d < 1e-14, "{d:e} at v = {}", a.components[0][i]);
            }
        }
    }

    #[test]
    fn power_of_two_scaling_is_exact(e in -8i32..8) {
        let psi = smooth_state(&[0.2, 1.0, -0.4, 1.0]);
        let scaled = psi.scaled(C64::new(2f64.powi(e), 0.0));
        let (a, b) = (velocity_grid(&psi, &policy()).unwrap(), velocity_grid(&scaled, &policy()).unwrap());
        for (x, y) in a.components[0].iter().zip(&b.components[0]) {
            prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
    }
}

