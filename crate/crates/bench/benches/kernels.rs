use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpast::bohm::{run_ensemble, velocity, IntegrationOptions};
use qpast::propagate::advance;
use qpast::rng::SeededRng;
use qpast::spectral::Spectral;
use qpast::{gaussian_packet, Grid, Hamiltonian, Packet, Potential, PotentialKind, Propagator};

fn square(n: usize) -> Grid {
    Grid::square(-16.0, 16.0, n).unwrap()
}

fn split_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("split_step_2d");
    for n in [64, 128, 256] {
        let g = square(n);
        let pot = Potential::realize(PotentialKind::Harmonic { omega: 0.5, center: vec![0.0, 0.0] }, &g).unwrap();
        let ham = Hamiltonian::new(pot, 1.0).unwrap();
        let prop = Propagator::new(&ham, 0.01).unwrap();
        let psi0 = gaussian_packet(&g, &Packet::new_2d([0.0, 0.0], [2.0, 2.0], [1.0, 0.0])).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut psi = psi0.clone();
            b.iter(|| advance(black_box(&mut psi), &prop, 1).unwrap());
        });
    }
    group.finish();
}

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_roundtrip_2d");
    for n in [128, 256, 512] {
        let g = square(n);
        let s = Spectral::new(&g);
        let psi = gaussian_packet(&g, &Packet::new_2d([0.0, 0.0], [2.0, 2.0], [0.0, 1.0])).unwrap();
        let mut amps = psi.amplitudes().to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                s.forward(black_box(&mut amps));
                s.inverse(black_box(&mut amps));
            });
        });
    }
    group.finish();
}

fn guidance(c: &mut Criterion) {
    let g = square(256);
    let psi = gaussian_packet(&g, &Packet::new_2d([0.0, 0.0], [2.0, 2.0], [1.0, -1.0])).unwrap();
    c.bench_function("velocity_2d_256", |b| b.iter(|| velocity(&psi, 1.0, black_box(&[0.3, -0.7])).unwrap()));
}

fn ensemble(c: &mut Criterion) {
    let g = square(128);
    let ham = Hamiltonian::free(&g);
    let psi = gaussian_packet(&g, &Packet::new_2d([0.0, 0.0], [2.0, 2.0], [1.0, 0.0])).unwrap();
    let mut group = c.benchmark_group("ensemble_2d_128");
    group.sample_size(10);
    for n in [100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| {
                let mut rng = SeededRng::substream(1, 1);
                run_ensemble(&psi, &ham, 0.1, 0.01, n, &mut rng, &IntegrationOptions::default()).unwrap()
            });
        });
    }
    group.finish();
}

criterion_group!(benches, split_step, fft, guidance, ensemble);
criterion_main!(benches);
