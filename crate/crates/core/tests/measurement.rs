mod common;

use std::time::Instant;

use common::{line, phase_distance, pointer_spec};
use pilot_wave::grid::{make_grid, AxisSpec, GridSpec};
use pilot_wave::measurement::{
    branch_revival_probe, conditional_wavefunction, effective_collapse_report, run_pointer_experiment, CollapseSummary,
    Reversal,
};
use pilot_wave::state::{init_gaussian, superpose, tensor_product, PhysicalParams, WaveFunction};
use pilot_wave::{Error, C64};
use std::sync::Arc;

fn packet(center: f64, sigma: f64, k: f64) -> WaveFunction {
    init_gaussian(line(-16.0, 16.0, 128), PhysicalParams::natural(1), &[center], &[sigma], &[k]).unwrap()
}

fn xy_grid() -> Arc<pilot_wave::grid::Grid> {
    Arc::new(make_grid(GridSpec::new(vec![AxisSpec::new(-16.0, 16.0, 128); 2])).unwrap())
}

#[test]
fn product_state_conditional_is_the_factor() {
    let psi = packet(1.0, 1.5, 0.7);
    let phi = packet(-0.5, 1.0, -1.2);
    let joint = tensor_product(&[&psi, &phi]).unwrap();
    assert_eq!(**joint.grid(), *xy_grid());
    for y in [-2.3, -0.5, 0.0, 0.61, 1.9] {
        let c = conditional_wavefunction(&joint, y).unwrap();
        assert!(phase_distance(&c.normalized, &psi) < 1e-10, "Y = {y}");
    }
    assert!(matches!(conditional_wavefunction(&joint, 15.0), Err(Error::ConditionalNorm(_))));
}

#[test]
fn conditional_of_separated_branches_is_the_branch() {
    let (psi1, psi2) = (packet(-3.0, 1.0, 0.5), packet(3.0, 1.0, -0.5));
    let (phi1, phi2) = (packet(-7.0, 1.0, 0.0), packet(7.0, 1.0, 0.0));
    let b1 = tensor_product(&[&psi1, &phi1]).unwrap();
    let b2 = tensor_product(&[&psi2, &phi2]).unwrap();
    let joint = superpose(&b1, &b2, C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap().state;
    for y in [-8.5, -7.0, -6.1, -5.2] {
        let c = conditional_wavefunction(&joint, y).unwrap();
        assert!(phase_distance(&c.normalized, &psi1) < 1e-6, "Y = {y}: {}", phase_distance(&c.normalized, &psi1));
    }
    let c = conditional_wavefunction(&joint, 7.3).unwrap();
    assert!(phase_distance(&c.normalized, &psi2) < 1e-6);
}

#[test]
fn entangled_conditional_depends_on_y() {
    let b1 = tensor_product(&[&packet(-2.0, 1.0, 0.0), &packet(-2.0, 1.0, 0.0)]).unwrap();
    let b2 = tensor_product(&[&packet(2.0, 1.0, 0.0), &packet(2.0, 1.0, 0.0)]).unwrap();
    let s = 0.5f64.sqrt();
    let joint = superpose(&b1, &b2, C64::new(s, 0.0), C64::new(s, 0.0)).unwrap().state;
    let a = conditional_wavefunction(&joint, -1.0).unwrap().normalized;
    let b = conditional_wavefunction(&joint, 1.0).unwrap().normalized;
    assert!(a.distance(&b).unwrap() > 0.1);
}

#[test]
fn unresolvable_pointer_is_rejected() {
    let mut spec = pointer_spec(&[0.5, 0.5], 10);
    spec.coupling = 0.5;
    let problems = spec.violations();
    assert!(problems.iter().any(|p| p.contains("cannot resolve")), "{problems:?}");
    assert!(matches!(run_pointer_experiment(&spec), Err(Error::Config(_))));
}

#[test]
fn single_branch_reads_one_outcome() {
    let out = run_pointer_experiment(&pointer_spec(&[1.0], 200)).unwrap();
    assert!(out.outcomes().iter().all(|o| *o == Some(0)));
    assert!(out.supports.overlap.iter().all(|o| *o == 0.0));
    assert_eq!(out.switches.after_separation, 0);
    assert!(out.born_checks()[0].pass);
}

#[test]
fn outcome_frequencies_follow_branch_weights() {
    let start = Instant::now();
    let out = run_pointer_experiment(&pointer_spec(&[0.5, 0.5], 2000)).unwrap();
    eprintln!("two-branch experiment: {:.1} s", start.elapsed().as_secs_f64());
    let report = out.report();
    for b in &report.born {
        assert!(b.pass, "{b:?}");
    }
    assert_eq!(report.status.ok, 2000);
    assert_eq!(out.switches.while_disjoint, 0);
    assert!(out.decomposition.overlap < 1e-6);
    assert!(out.supports.overlap[0] > 0.1);
    assert!(report.pass);

    let reports = effective_collapse_report(&out, &(0..40).collect::<Vec<_>>()).unwrap();
    let summary = CollapseSummary::new(&reports, 1e-6);
    assert_eq!(summary.excluded, 0, "{:?}", reports.iter().find_map(|r| r.excluded.clone()));
    assert!(summary.max_cross_mass < 1e-6, "{summary:?}");
    assert!(summary.max_unoccupied_velocity < 1e-8, "{summary:?}");
    assert!(!summary.effective_at_start);
    assert!(reports.iter().all(|r| r.effective_from.is_some()));

    let dir = tempfile::tempdir().unwrap();
    report.write_json(&dir.path().join("pointer.json")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("pointer.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["born"].as_array().unwrap().len(), 2);
}

#[test]
fn reconverging_branches_switch_labels_only_while_overlapping() {
    let mut spec = pointer_spec(&[0.5, 0.5], 200);
    spec.drift_time = 0.7;
    // the reversal also kicks the system along x; a heavy system stays put
    spec.params.masses[0] = 100.0;
    let report = branch_revival_probe(&spec, &Reversal::mirror(&spec, 1.5)).unwrap();
    assert!(report.separated_at.is_some());
    assert!(!report.reoverlap_windows.is_empty(), "{:?}", report.overlap.iter().step_by(20).collect::<Vec<_>>());
    assert!(report.switches.after_separation > 0);
    assert_eq!(report.switches.while_disjoint, 0);

    let mut single = pointer_spec(&[1.0], 50);
    single.drift_time = 0.7;
    single.params.masses[0] = 100.0;
    let report = branch_revival_probe(&single, &Reversal::mirror(&single, 1.5)).unwrap();
    assert!(report.overlap.iter().all(|o| *o == 0.0));
    assert_eq!(report.switches.after_separation, 0);
}
