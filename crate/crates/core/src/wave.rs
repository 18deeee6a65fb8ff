//! Wavefunctions on a uniform grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Norms below this are treated as a vanished state.
pub const MIN_NORM: f64 = 1e-12;

/// Complex amplitude field on a [`Grid`] at a given time.
///
/// The norm is `sum |psi_i|^2 * cell_volume`; constructors in this crate
/// return normalized states unless stated otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amps: Vec<Complex64>,
    time: f64,
}

impl WaveFunction {
    pub fn from_amplitudes(grid: Grid, amps: Vec<Complex64>, time: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("non-finite amplitude".into()));
        }
        Ok(Self { grid, amps, time })
    }

    /// Samples `f` at every cell center. Not normalized.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let amps = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            amps,
            time: 0.0,
        }
    }

    /// Normalized plane wave `exp(i k.x)`.
    pub fn plane_wave(grid: &Grid, k: &[f64]) -> Result<Self> {
        if k.len() != grid.dim() {
            return Err(Error::Precondition("wavevector dimension".into()));
        }
        let kk = [k[0], k.get(1).copied().unwrap_or(0.0)];
        Self::from_fn(grid, |p| Complex64::from_polar(1.0, kk[0] * p[0] + kk[1] * p[1])).normalize()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Rescales to unit norm, leaving the phase untouched.
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > MIN_NORM) {
            return Err(Error::ZeroNorm(n));
        }
        let s = 1.0 / n;
        self.amps.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    /// `<self|other>` with the grid measure.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    /// Probability density `|psi|^2` per cell.
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Normalized linear combination of states on a common grid.
    pub fn superpose(terms: &[(Complex64, &WaveFunction)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Precondition("empty superposition".into()))?;
        let grid = first.grid.clone();
        let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (c, w) in terms {
            if w.grid != grid {
                return Err(Error::GridMismatch);
            }
            for (a, b) in amps.iter_mut().zip(&w.amps) {
                *a += c * b;
            }
        }
        Self {
            grid,
            amps,
            time: first.time,
        }
        .normalize()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Parameters of a (per-axis separable) Gaussian wave packet
/// `psi(x) ~ exp(-(x - x0)^2 / (4 sigma^2) + i p0 x)`.
///
/// `sigma` is the position standard deviation of `|psi|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl Packet {
    pub fn new_1d(x0: f64, sigma: f64, p0: f64) -> Self {
        Self {
            center: vec![x0],
            sigma: vec![sigma],
            momentum: vec![p0],
        }
    }

    pub fn new_2d(x0: [f64; 2], sigma: [f64; 2], p0: [f64; 2]) -> Self {
        Self {
            center: x0.to_vec(),
            sigma: sigma.to_vec(),
            momentum: p0.to_vec(),
        }
    }
}

/// Builds a normalized Gaussian packet.
///
/// Requires `sigma >= 3 * spacing`, the `4 sigma` support inside the extent,
/// and `|p0| + 5 / (2 sigma)` below the Nyquist wavenumber on every axis.
pub fn gaussian_packet(grid: &Grid, packet: &Packet) -> Result<WaveFunction> {
    let d = grid.dim();
    if packet.center.len() != d || packet.sigma.len() != d || packet.momentum.len() != d {
        return Err(Error::Precondition(format!(
            "packet parameters must have dimension {d}"
        )));
    }
    for (a, axis) in grid.axes().iter().enumerate() {
        let (x0, s, p0) = (packet.center[a], packet.sigma[a], packet.momentum[a]);
        if !(s >= 3.0 * axis.spacing()) {
            return Err(Error::Precondition(format!(
                "sigma {s} too small for spacing {} on axis {a}",
                axis.spacing()
            )));
        }
        if x0 - 4.0 * s < axis.lo || x0 + 4.0 * s > axis.hi {
            return Err(Error::Precondition(format!(
                "packet at {x0} with sigma {s} overlaps the boundary of axis {a}"
            )));
        }
        if p0.abs() + 5.0 / (2.0 * s) > axis.nyquist() {
            return Err(Error::Precondition(format!(
                "momentum {p0} not representable (Nyquist {})",
                axis.nyquist()
            )));
        }
    }
    let c = [packet.center[0], packet.center.get(1).copied().unwrap_or(0.0)];
    let s = [packet.sigma[0], packet.sigma.get(1).copied().unwrap_or(1.0)];
    let p = [packet.momentum[0], packet.momentum.get(1).copied().unwrap_or(0.0)];
    WaveFunction::from_fn(grid, |x| {
        let mut re = 0.0;
        let mut ph = 0.0;
        for a in 0..d {
            re -= (x[a] - c[a]).powi(2) / (4.0 * s[a] * s[a]);
            ph += p[a] * x[a];
        }
        Complex64::from_polar(re.exp(), ph)
    })
    .normalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_constant_field() {
        let g = Grid::line(-10.0, 10.0, 64).unwrap();
        let w = WaveFunction::from_fn(&g, |_| Complex64::new(3.0, 0.0)).normalize().unwrap();
        for z in w.amplitudes() {
            assert!((z.re - 1.0 / 20f64.sqrt()).abs() < 1e-14);
        }
        assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_keeps_phase_and_is_idempotent() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        let w = gaussian_packet(&g, &Packet::new_1d(0.5, 1.0, 1.3)).unwrap();
        let again = w.clone().normalize().unwrap();
        for (a, b) in w.amplitudes().iter().zip(again.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn normalize_zero_field_fails() {
        let g = Grid::line(-10.0, 10.0, 64).unwrap();
        let w = WaveFunction::from_fn(&g, |_| Complex64::new(0.0, 0.0));
        assert!(matches!(w.normalize(), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn packet_preconditions() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        assert!(gaussian_packet(&g, &Packet::new_1d(0.0, 0.01, 0.0)).is_err());
        assert!(gaussian_packet(&g, &Packet::new_1d(8.0, 1.0, 0.0)).is_err());
        assert!(gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 40.0)).is_err());
        assert!(gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 2.0)).is_ok());
    }

    #[test]
    fn density_of_plane_wave_is_constant() {
        let g = Grid::line(-10.0, 10.0, 128).unwrap();
        let w = WaveFunction::plane_wave(&g, &[2.0 * std::f64::consts::PI * 4.0 / 20.0]).unwrap();
        let rho = w.density();
        for r in &rho {
            assert!((r - 1.0 / 20.0).abs() < 1e-14);
        }
        let total: f64 = rho.iter().sum::<f64>() * g.cell_volume();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
