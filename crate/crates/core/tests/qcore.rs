use std::f64::consts::PI;

use proptest::prelude::*;
use qpast::potential::{Potential, PotentialKind};
use qpast::propagate::advance;
use qpast::snapshot::{load_record, save_record};
use qpast::{
    continuity_residual, current, density, evolve, gaussian_packet, reverse_evolve, Complex64, Error, Grid,
    Hamiltonian, Packet, Propagator, WaveFunction,
};

/// Position moments by direct quadrature of the amplitudes.
fn position_moments(psi: &WaveFunction) -> (f64, f64) {
    let g = psi.grid();
    let h = g.spacing()[0];
    let xs: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0]).collect();
    let w: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm_sqr() * h).collect();
    let m: f64 = xs.iter().zip(&w).map(|(x, w)| x * w).sum();
    let v: f64 = xs.iter().zip(&w).map(|(x, w)| (x - m).powi(2) * w).sum();
    (m, v.sqrt())
}

/// Momentum spread from a naive O(N^2) DFT.
fn momentum_std(psi: &WaveFunction) -> f64 {
    let g = psi.grid();
    let n = g.len();
    let ax = g.axis(0);
    let mut num = 0.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for m in 0..n {
        let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 } * 2.0 * PI / ax.length();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, z) in psi.amplitudes().iter().enumerate() {
            acc += z * Complex64::from_polar(1.0, -2.0 * PI * (m * j) as f64 / n as f64);
        }
        let w = acc.norm_sqr();
        num += w;
        mean += w * k;
        second += w * k * k;
    }
    mean /= num;
    (second / num - mean * mean).sqrt()
}

fn free_width(sigma: f64, t: f64) -> f64 {
    sigma * (1.0 + (t / (2.0 * sigma * sigma)).powi(2)).sqrt()
}

#[test]
fn gaussian_moments() {
    let g = Grid::line(-10.0, 10.0, 256).unwrap();
    let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
    let (m, s) = position_moments(&psi);
    assert!(m.abs() < 1e-12);
    assert!((s - 1.0).abs() < 0.01, "{s}");
    let sp = momentum_std(&psi);
    assert!((sp - 0.5).abs() < 0.01, "{sp}");
    assert!((s * sp - 0.5).abs() < 1e-6);
}

#[test]
fn gaussian_preconditions() {
    let g = Grid::line(-10.0, 10.0, 256).unwrap();
    assert!(matches!(gaussian_packet(&g, &Packet::new_1d(0.0, 0.01, 0.0)), Err(Error::Precondition(_))));
    assert!(gaussian_packet(&g, &Packet::new_1d(8.0, 1.0, 0.0)).is_err());
    assert!(gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 40.0)).is_err());
}

#[test]
fn grid_rejects_bad_sizes() {
    assert!(matches!(Grid::line(-1.0, 1.0, 100), Err(Error::InvalidGrid(_))));
    assert!(Grid::line(-1.0, 1.0, 8).is_err());
    assert!(Grid::line(1.0, -1.0, 64).is_err());
}

#[test]
fn normalize_zero_state_fails() {
    let g = Grid::line(-1.0, 1.0, 16).unwrap();
    let z = WaveFunction::from_fn(&g, |_| Complex64::new(0.0, 0.0));
    assert!(matches!(z.normalize(), Err(Error::ZeroNorm(_))));
}

#[test]
fn density_of_plane_wave_and_normalization() {
    let g = Grid::line(-10.0, 10.0, 128).unwrap();
    let amp = 0.3;
    let psi = WaveFunction::from_fn(&g, |x| Complex64::from_polar(amp, 0.6283185307179586 * x[0]));
    for r in density(&psi) {
        assert!((r - amp * amp).abs() < 1e-15);
    }
    let n = gaussian_packet(&g, &Packet::new_1d(1.0, 1.2, 0.5)).unwrap();
    let total: f64 = density(&n).iter().sum::<f64>() * g.cell_volume();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn current_special_cases() {
    let g = Grid::line(-10.0, 10.0, 256).unwrap();
    let real = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
    let j = current(&real, 1.0);
    assert!(j[0].iter().all(|v| v.abs() < 1e-12));

    let k = 2.0 * PI * 4.0 / 20.0;
    let pw = WaveFunction::plane_wave(&g, &[k]).unwrap();
    let j = current(&pw, 1.0);
    let rho = density(&pw);
    for (ji, ri) in j[0].iter().zip(&rho) {
        assert!((ji / ri - 1.2566).abs() < 1e-4);
        assert!((ji / ri - k).abs() < 1e-9);
    }
}

/// Central-difference current on the grid.
fn fd_current(psi: &WaveFunction, mass: f64) -> Vec<f64> {
    let a = psi.amplitudes();
    let n = a.len();
    let h = psi.grid().spacing()[0];
    (0..n)
        .map(|i| {
            let d = (a[(i + 1) % n] - a[(i + n - 1) % n]) / (2.0 * h);
            (a[i].conj() * d).im / mass
        })
        .collect()
}

#[test]
fn spectral_current_matches_finite_differences() {
    let mut errs = Vec::new();
    for points in [128, 256, 512] {
        let g = Grid::line(-10.0, 10.0, points).unwrap();
        let psi = gaussian_packet(&g, &Packet::new_1d(-1.0, 1.0, 1.3)).unwrap();
        let js = &current(&psi, 1.0)[0];
        let jf = fd_current(&psi, 1.0);
        errs.push(js.iter().zip(&jf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{errs:?}");
    }
}

#[test]
fn free_spreading_two_resolutions() {
    for points in [256, 512] {
        let g = Grid::line(-20.0, 20.0, points).unwrap();
        let sigma = 1.0;
        let psi0 = gaussian_packet(&g, &Packet::new_1d(-3.0, sigma, 1.0)).unwrap();
        let rec = evolve(&psi0, &Hamiltonian::free(&g), 2.0, 0.01, 100).unwrap();
        for snap in &rec.snapshots {
            let (m, s) = position_moments(snap);
            let t = snap.time();
            assert!((s / free_width(sigma, t) - 1.0).abs() < 0.01, "t={t} s={s}");
            assert!((m - (-3.0 + t)).abs() < 1e-6);
        }
        let (_, s) = position_moments(rec.last());
        assert!((s - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.01);
    }
}

#[test]
fn coherent_state_revival() {
    for points in [128, 256] {
        let g = Grid::line(-12.0, 12.0, points).unwrap();
        let omega = 1.0;
        let pot = Potential::realize(PotentialKind::Harmonic { omega, center: vec![0.0] }, &g).unwrap();
        let ham = Hamiltonian::new(pot, 1.0).unwrap();
        // ground-state width 1/sqrt(2 omega), displaced by 2
        let psi0 = gaussian_packet(&g, &Packet::new_1d(2.0, (0.5f64).sqrt(), 0.0)).unwrap();
        let period = 2.0 * PI / omega;
        let steps = 2000;
        let mut psi = psi0.clone();
        advance(&mut psi, &Propagator::new(&ham, period / steps as f64).unwrap(), steps).unwrap();
        let f = psi0.fidelity(&psi).unwrap();
        assert!(f > 0.999, "points={points} fidelity={f}");
    }
}

#[test]
fn unitarity_and_reversibility_10k_steps() {
    let g = Grid::line(-10.0, 10.0, 256).unwrap();
    let pot = Potential::realize(PotentialKind::Harmonic { omega: 0.7, center: vec![0.5] }, &g).unwrap();
    let ham = Hamiltonian::new(pot, 1.0).unwrap();
    let psi0 = gaussian_packet(&g, &Packet::new_1d(-1.0, 1.0, 2.0)).unwrap();
    let mut psi = psi0.clone();
    advance(&mut psi, &Propagator::new(&ham, 1e-3).unwrap(), 10_000).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-10);
    let back = reverse_evolve(&psi, &ham, 10.0, 1e-3).unwrap();
    assert!(psi0.fidelity(&back).unwrap() >= 1.0 - 1e-10);
}

#[test]
fn continuity_ground_state_and_plane_wave() {
    let g = Grid::line(-10.0, 10.0, 256).unwrap();
    let pot = Potential::realize(PotentialKind::Harmonic { omega: 1.0, center: vec![0.0] }, &g).unwrap();
    let ham = Hamiltonian::new(pot, 1.0).unwrap();
    let ground = gaussian_packet(&g, &Packet::new_1d(0.0, (0.5f64).sqrt(), 0.0)).unwrap();
    let rec = evolve(&ground, &ham, 2e-3, 1e-4, 1).unwrap();
    let r = continuity_residual(&rec).unwrap();
    assert!(r < 1e-8, "{r}");

    let pw = WaveFunction::plane_wave(&g, &[2.0 * PI * 3.0 / 20.0]).unwrap();
    let rec = evolve(&pw, &Hamiltonian::free(&g), 0.05, 0.01, 1).unwrap();
    assert!(continuity_residual(&rec).unwrap() < 1e-10);

    let short = evolve(&pw, &Hamiltonian::free(&g), 0.01, 0.01, 1).unwrap();
    assert!(continuity_residual(&short).is_err());
}

#[test]
fn continuity_converges_at_second_order() {
    let residual = |points: usize, dt: f64| {
        let g = Grid::line(-10.0, 10.0, points).unwrap();
        let psi0 = gaussian_packet(&g, &Packet::new_1d(-2.0, 1.0, 2.0)).unwrap();
        let rec = evolve(&psi0, &Hamiltonian::free(&g), 20.0 * dt, dt, 1).unwrap();
        continuity_residual(&rec).unwrap()
    };
    let a = residual(256, 1e-3);
    let b = residual(512, 5e-4);
    assert!(a / b >= 3.0, "{a} {b}");
}

#[test]
fn evolve_rejects_unnormalized_and_fractional_steps() {
    let g = Grid::line(-10.0, 10.0, 64).unwrap();
    let psi = WaveFunction::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
    assert!(evolve(&psi, &Hamiltonian::free(&g), 1.0, 0.1, 1).is_err());
    let psi = psi.normalize().unwrap();
    assert!(evolve(&psi, &Hamiltonian::free(&g), 1.0, 0.3, 1).is_err());
}

#[test]
fn record_round_trip_on_disk() {
    let g = Grid::square(-8.0, 8.0, 32).unwrap();
    let psi0 = gaussian_packet(&g, &Packet::new_2d([0.0, 0.5], [1.6, 1.6], [0.5, -0.5])).unwrap();
    let rec = evolve(&psi0, &Hamiltonian::free(&g), 0.5, 0.05, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_record(dir.path(), &rec).unwrap();
    let back = load_record(dir.path()).unwrap();
    assert_eq!(back.snapshots.len(), rec.snapshots.len());
    for (a, b) in rec.snapshots.iter().zip(&back.snapshots) {
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert_eq!(a.time(), b.time());
    }
    let meta = std::fs::read_to_string(dir.path().join("metadata.json")).unwrap();
    assert!(meta.contains("exp(-iHt)"));
}

#[test]
fn propagation_is_thread_count_independent() {
    let g = Grid::square(-8.0, 8.0, 64).unwrap();
    let psi0 = gaussian_packet(&g, &Packet::new_2d([-1.0, 0.5], [1.0, 1.2], [1.0, -0.5])).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut psi = psi0.clone();
            advance(&mut psi, &Propagator::new(&Hamiltonian::free(&g), 0.01).unwrap(), 50).unwrap();
            psi
        })
    };
    let a = run(1);
    let b = run(4);
    let diff = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-13, "{diff}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_step_is_unitary_and_reversible(
        omega in 0.0f64..2.0,
        center in -1.0f64..1.0,
        x0 in -2.0f64..2.0,
        sigma in 0.6f64..1.5,
        p0 in -3.0f64..3.0,
        dt in 1e-3f64..2e-2,
        steps in 1usize..400,
    ) {
        let g = Grid::line(-12.0, 12.0, 256).unwrap();
        let pot = Potential::realize(PotentialKind::Harmonic { omega, center: vec![center] }, &g).unwrap();
        let ham = Hamiltonian::new(pot, 1.0).unwrap();
        let psi0 = gaussian_packet(&g, &Packet::new_1d(x0, sigma, p0)).unwrap();
        let mut psi = psi0.clone();
        advance(&mut psi, &Propagator::new(&ham, dt).unwrap(), steps).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        advance(&mut psi, &Propagator::new(&ham, -dt).unwrap(), steps).unwrap();
        prop_assert!(psi0.fidelity(&psi).unwrap() >= 1.0 - 1e-10);
    }
}
