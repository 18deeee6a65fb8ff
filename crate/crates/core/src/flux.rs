//! Probability density, probability current and the continuity equation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagate::EvolutionRecord;
use crate::spectral::Spectral;
use crate::wave::WaveFunction;

/// `rho = |psi|^2` on every cell.
pub fn density(psi: &WaveFunction) -> Vec<f64> {
    psi.density()
}

/// Probability current `J = (1/2im)(psi* grad psi - psi grad psi*) = Im(psi* grad psi)/m`,
/// one component per axis, with spectral gradients.
pub fn current(psi: &WaveFunction, mass: f64) -> Vec<Vec<f64>> {
    current_with(&Spectral::new(psi.grid()), psi.amplitudes(), mass)
}

pub fn current_with(spectral: &Spectral, amps: &[Complex64], mass: f64) -> Vec<Vec<f64>> {
    spectral
        .gradient(amps)
        .into_iter()
        .map(|g| {
            amps.iter()
                .zip(&g)
                .map(|(p, d)| (p.conj() * d).im / mass)
                .collect()
        })
        .collect()
}

/// Spectral divergence of a real vector field.
pub fn divergence(spectral: &Spectral, field: &[Vec<f64>]) -> Vec<f64> {
    let n = spectral.grid().len();
    let mut div = vec![0.0; n];
    for (a, comp) in field.iter().enumerate() {
        let c: Vec<Complex64> = comp.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let d = spectral.derivative(&c, a);
        for (acc, z) in div.iter_mut().zip(&d) {
            *acc += z.re;
        }
    }
    div
}

/// Root-mean-square over interior snapshots of the L2 norm of
/// `(rho(t+h) - rho(t-h)) / 2h + div J(t)`, where `h` is the snapshot spacing.
pub fn continuity_residual(record: &EvolutionRecord) -> Result<f64> {
    let snaps = &record.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Precondition(format!(
            "continuity residual needs >= 3 snapshots, got {}",
            snaps.len()
        )));
    }
    let h = snaps[1].time() - snaps[0].time();
    for w in snaps.windows(2) {
        let d = w[1].time() - w[0].time();
        if (d - h).abs() > 1e-9 * h.abs() {
            return Err(Error::Precondition("snapshot spacing is not uniform".into()));
        }
    }
    let grid = snaps[0].grid();
    let spectral = Spectral::new(grid);
    let dv = grid.cell_volume();
    let mut total = 0.0;
    for i in 1..snaps.len() - 1 {
        let rp = snaps[i + 1].density();
        let rm = snaps[i - 1].density();
        let j = current_with(&spectral, snaps[i].amplitudes(), record.mass);
        let div = divergence(&spectral, &j);
        let s: f64 = rp
            .iter()
            .zip(&rm)
            .zip(&div)
            .map(|((a, b), d)| ((a - b) / (2.0 * h) + d).powi(2))
            .sum();
        total += s * dv;
    }
    Ok((total / (snaps.len() - 2) as f64).sqrt())
}
