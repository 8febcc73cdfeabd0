use pilot_wave_web::Tunneling;

#[test]
fn density_rows_stay_normalised() {
    let sim = Tunneling::new(2.0, 2.0, 1.0).unwrap();
    let rho = sim.density().unwrap();
    assert_eq!(rho.len(), sim.frames() * sim.points());
    let dx = (sim.upper() - sim.lower()) / sim.points() as f64;
    for row in rho.chunks(sim.points()) {
        let mass: f64 = row.iter().sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    }
}

#[test]
fn potential_is_the_barrier() {
    let sim = Tunneling::new(3.0, 1.0, 0.1).unwrap();
    let v = sim.potential();
    let peak = v.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 3.0).abs() < 1e-12);
    assert!(v[0] < 1e-12);
}

#[test]
fn paths_are_reproducible_and_start_near_the_packet() {
    let sim = Tunneling::new(2.0, 2.0, 1.0).unwrap();
    let a = sim.trajectories(20, 5).unwrap();
    let b = sim.trajectories(20, 5).unwrap();
    assert_eq!(a.len(), 20 * sim.frames());
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    for p in a.chunks(sim.frames()) {
        assert!((p[0] + 6.0).abs() < 6.0);
        // moving right with the packet
        assert!(p[sim.frames() - 1] > p[0]);
    }
}

#[test]
fn probe_reads_plane_wave_velocity_at_the_packet_centre() {
    let sim = Tunneling::new(0.0, 1.5, 0.2).unwrap();
    let pv = sim.probe(-6.0, 0.0).unwrap();
    // v = k at the centre of a Gaussian packet with hbar = m = 1
    assert!((pv[0] - 1.5).abs() < 1e-9, "{pv:?}");
    // U = 1/(4 sigma^2) at the centre of a sigma = 1 Gaussian
    assert!((pv[1] - 0.25).abs() < 1e-3, "{pv:?}");
}
