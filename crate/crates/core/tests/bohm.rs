use qpast::bohm::{
    integrate_many, integrate_trajectory, ks_distance, ordering_violations, run_ensemble, sample_initial_positions,
    two_particle_velocity, velocity, EnsembleSidecar, IntegrationOptions, TrajectoryStatus,
};
use qpast::rng::SeededRng;
use qpast::{gaussian_packet, Complex64, Grid, Hamiltonian, Packet, Potential, PotentialKind, WaveFunction};

fn line() -> Grid {
    Grid::line(-20.0, 20.0, 512).unwrap()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[test]
fn stationary_ground_state_has_zero_velocity() {
    let g = line();
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 0.5f64.sqrt(), 0.0)).unwrap();
    for x in [-1.3, -0.2, 0.0, 0.77, 1.9] {
        assert!(velocity(&psi, 1.0, &[x]).unwrap()[0].abs() < 1e-9);
    }
}

#[test]
fn boosted_gaussian_moves_with_its_momentum() {
    let g = line();
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 2.0)).unwrap();
    for x in [-1.5, -0.3, 0.0, 0.4, 1.2] {
        let v = velocity(&psi, 1.0, &[x]).unwrap()[0];
        assert!((v - 2.0).abs() < 1e-4, "x={x} v={v}");
    }
    // heavier particle, same momentum
    let v = velocity(&psi, 4.0, &[0.3]).unwrap()[0];
    assert!((v - 0.5).abs() < 1e-4);
}

#[test]
fn free_spreading_trajectory_scales_with_width() {
    let g = line();
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
    let tr = integrate_trajectory(&psi, &ham, &[1.0], 2.0, 0.01).unwrap();
    assert!(tr.is_complete());
    // X(t) = x0 * sigma(t) / sigma(0)
    for s in tr.states() {
        let width = (1.0 + (s.time / 2.0).powi(2)).sqrt();
        assert!((s.position[0] - width).abs() < 1e-3, "{s:?}");
    }
    assert!((tr.last()[0] - 2f64.sqrt()).abs() < 1e-3);
}

fn round_trip_error(dt: f64) -> f64 {
    let g = line();
    let pot = Potential::realize(PotentialKind::Harmonic { omega: 0.6, center: vec![0.0] }, &g).unwrap();
    let ham = Hamiltonian::new(pot, 1.0).unwrap();
    let psi = gaussian_packet(&g, &Packet::new_1d(-1.0, 1.3, 1.0)).unwrap();
    let starts = vec![vec![-2.5], vec![-1.0], vec![0.3], vec![1.7]];
    let fwd = integrate_many(&psi, &ham, &starts, 2.0, dt, &IntegrationOptions::default()).unwrap();
    let ends: Vec<Vec<f64>> = fwd.trajectories.iter().map(|t| t.last().to_vec()).collect();
    let back = integrate_many(fwd.final_state(), &ham, &ends, 0.0, dt, &IntegrationOptions::default()).unwrap();
    starts
        .iter()
        .zip(&back.trajectories)
        .map(|(s, t)| {
            assert!(t.is_complete());
            (t.last()[0] - s[0]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn forward_backward_round_trip_converges() {
    // Multilinear interpolation leaves kinks in v at cell faces, so the ratio
    // between step sizes is not the clean RK4 factor.
    let coarse = round_trip_error(0.04);
    let fine = round_trip_error(0.02);
    assert!(coarse < 1e-6 && fine < 1e-6, "{coarse} {fine}");
    assert!(fine < coarse, "{coarse} {fine}");
}

#[test]
fn sampled_positions_match_density() {
    let g = line();
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
    let mut rng = SeededRng::substream(3, 1);
    let xs: Vec<f64> = sample_initial_positions(&psi, 100_000, &mut rng).into_iter().map(|p| p[0]).collect();
    let (m, s) = mean_std(&xs);
    assert!(m.abs() < 0.01);
    assert!((s - 1.0).abs() < 0.01, "{s}");
    assert!(ks_distance(&xs, &psi, 0) < 0.01);
}

#[test]
fn ensemble_at_zero_time_follows_born_density() {
    let g = line();
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_1d(1.0, 1.3, 0.5)).unwrap();
    let mut rng = SeededRng::substream(9, 1);
    let ens = run_ensemble(&psi, &ham, 0.0, 0.01, 4000, &mut rng, &IntegrationOptions::default()).unwrap();
    let xs: Vec<f64> = ens.final_positions().iter().map(|p| p[0]).collect();
    assert!(ks_distance(&xs, &psi, 0) < 0.02);
    assert!(run_ensemble(&psi, &ham, 1.0, 0.01, 0, &mut rng, &IntegrationOptions::default()).is_err());
}

#[test]
fn ensemble_spreads_like_the_packet_without_crossing() {
    let g = line();
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
    let mut rng = SeededRng::substream(21, 1);
    let opts = IntegrationOptions { path_stride: 50, snapshot_stride: 50, ..Default::default() };
    let ens = run_ensemble(&psi, &ham, 2.0, 0.01, 2000, &mut rng, &opts).unwrap();
    assert_eq!(ens.abort_fraction(), 0.0);
    let xs: Vec<f64> = ens.final_positions().iter().map(|p| p[0]).collect();
    let (_, s) = mean_std(&xs);
    assert!((s / 2f64.sqrt() - 1.0).abs() < 0.02, "{s}");
    assert_eq!(ordering_violations(&ens.trajectories), 0);

    // equivariance: every stored snapshot matches the co-moving sample
    assert_eq!(ens.record.snapshots.len(), ens.trajectories[0].len());
    for (i, snap) in ens.record.snapshots.iter().enumerate() {
        assert!((snap.time() - ens.trajectories[0].time(i)).abs() < 1e-12);
        let xs: Vec<f64> = ens.positions_at(i).iter().map(|p| p[0]).collect();
        let d = ks_distance(&xs, snap, 0);
        assert!(d < 0.04, "snapshot {i}: ks {d}");
    }
}

fn product(g: &Grid, a: &Packet, b: &Packet) -> WaveFunction {
    WaveFunction::from_fn(g, |x| {
        let f = |p: &Packet, y: f64| {
            let s = p.sigma[0];
            Complex64::from_polar((-(y - p.center[0]).powi(2) / (4.0 * s * s)).exp(), p.momentum[0] * y)
        };
        f(a, x[0]) * f(b, x[1])
    })
    .normalize()
    .unwrap()
}

#[test]
fn two_particle_product_velocities() {
    let g = Grid::square(-10.0, 10.0, 128).unwrap();
    let a = Packet::new_1d(-2.0, 1.0, 1.0);
    let b = Packet::new_1d(2.0, 1.0, -1.0);
    let psi = product(&g, &a, &b);
    let (v1, v2) = two_particle_velocity(&psi, 1.0, -2.0, 2.0).unwrap();
    assert!((v1 - 1.0).abs() < 1e-6 && (v2 + 1.0).abs() < 1e-6, "{v1} {v2}");

    // v1 of a product state ignores the partner's position and state
    let other = product(&g, &a, &Packet::new_1d(1.0, 1.5, 0.3));
    for x2 in [0.5, 1.5, 2.5] {
        let (u, _) = two_particle_velocity(&psi, 1.0, -1.7, x2).unwrap();
        let (w, _) = two_particle_velocity(&other, 1.0, -1.7, x2).unwrap();
        assert!((u - v1).abs() < 1e-9 && (w - v1).abs() < 1e-9);
    }
    assert!(two_particle_velocity(&gaussian_packet(&line(), &a).unwrap(), 1.0, 0.0, 0.0).is_err());
}

#[test]
fn entangled_state_velocity_depends_on_partner() {
    let g = Grid::square(-10.0, 10.0, 128).unwrap();
    let a = Packet::new_1d(-2.0, 1.0, 1.0);
    let b = Packet::new_1d(2.0, 1.0, -1.0);
    let ab = product(&g, &a, &b);
    let ba = product(&g, &b, &a);
    let psi = WaveFunction::superpose(&[(Complex64::new(1.0, 0.0), &ab), (Complex64::new(1.0, 0.0), &ba)]).unwrap();
    let (near, _) = two_particle_velocity(&psi, 1.0, 0.0, -1.0).unwrap();
    let (far, _) = two_particle_velocity(&psi, 1.0, 0.0, 1.0).unwrap();
    assert!((near - far).abs() > 0.1 * near.abs().max(far.abs()), "{near} {far}");
}

#[test]
fn start_on_a_node_aborts() {
    let g = line();
    let ham = Hamiltonian::free(&g);
    let psi = WaveFunction::from_fn(&g, |x| Complex64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0))
        .normalize()
        .unwrap();
    let out = integrate_many(&psi, &ham, &[vec![0.0], vec![1.0]], 0.5, 0.01, &IntegrationOptions::default()).unwrap();
    match &out.trajectories[0].status {
        TrajectoryStatus::NodeAbort { time, position } => {
            assert_eq!(*time, 0.0);
            assert_eq!(position, &vec![0.0]);
        }
        s => panic!("expected abort, got {s:?}"),
    }
    assert!(out.trajectories[0].node_encounters >= 1);
    assert!(out.trajectories[1].is_complete());
}

#[test]
fn periodic_wrap_is_flagged() {
    let g = Grid::line(-5.0, 5.0, 64).unwrap();
    let k = 2.0 * std::f64::consts::PI * 2.0 / 10.0;
    let psi = WaveFunction::plane_wave(&g, &[k]).unwrap();
    let tr = integrate_trajectory(&psi, &Hamiltonian::free(&g), &[4.0], 2.0, 0.01).unwrap();
    assert!(tr.is_complete());
    assert_eq!(tr.wraps, 1);
    let expected = (4.0 + k * 2.0 + 5.0).rem_euclid(10.0) - 5.0;
    assert!((tr.last()[0] - expected).abs() < 1e-9);
}

#[test]
fn ensemble_is_thread_count_independent() {
    let g = Grid::square(-8.0, 8.0, 64).unwrap();
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_2d([0.0, 0.0], [1.0, 1.3], [0.5, -0.5])).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut rng = SeededRng::substream(77, 1);
            run_ensemble(&psi, &ham, 0.5, 0.01, 64, &mut rng, &IntegrationOptions::default()).unwrap()
        })
    };
    let a = run(1);
    let b = run(4);
    for (x, y) in a.trajectories.iter().zip(&b.trajectories) {
        assert_eq!(x.len(), y.len());
        for i in 0..x.len() {
            assert_eq!(x.position(i), y.position(i));
        }
    }
}

#[test]
fn csv_and_sidecar_output() {
    let g = line();
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 1.0)).unwrap();
    let mut rng = SeededRng::substream(5, 1);
    let opts = IntegrationOptions { path_stride: 10, ..Default::default() };
    let ens = run_ensemble(&psi, &ham, 1.0, 0.01, 8, &mut rng, &opts).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    ens.write_csv(&csv, &[0, 3], 2).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,t,x"));
    // 11 stored points per path, every second one kept
    assert_eq!(lines.clone().count(), 2 * 6);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "3");
    assert_eq!(last[1].parse::<f64>().unwrap(), 1.0);

    let side = dir.path().join("paths.json");
    ens.write_sidecar(&side).unwrap();
    let back: EnsembleSidecar = serde_json::from_slice(&std::fs::read(&side).unwrap()).unwrap();
    assert_eq!(back, ens.sidecar());
    assert_eq!((back.seed, back.stream, back.n, back.path_stride), (5, 1, 8, 10));
}
