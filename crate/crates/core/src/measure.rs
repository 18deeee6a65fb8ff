//! Projective measurement on grids: window projectors, Born probabilities,
//! sampling, collapse, moment statistics and the reconstruction fidelity of a
//! collapsed state evolved back in time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::propagate::{advance, reverse_evolve, step_count, Hamiltonian, Propagator};
use crate::rng::SeededRng;
use crate::spectral::Spectral;
use crate::wave::WaveFunction;

/// Weights below this are treated as an impossible outcome by [`collapse`].
pub const NULL_WEIGHT: f64 = 1e-18;

/// Representation in which a projector's mask is diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Cells of the position grid.
    Position,
    /// Modes of the discrete Fourier transform, in FFT order.
    Momentum,
}

/// A projector diagonal in position or momentum: multiplication by a 0/1 mask.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProjector {
    grid: Grid,
    mask: Vec<bool>,
    label: String,
    basis: Basis,
}

impl GridProjector {
    pub fn new(grid: &Grid, mask: Vec<bool>, label: impl Into<String>, basis: Basis) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::Precondition("projector mask is empty".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            mask,
            label: label.into(),
            basis,
        })
    }

    /// Cells whose centers lie in the half-open box `[lo, hi)` on every axis.
    pub fn window(grid: &Grid, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != grid.dim() {
            return Err(Error::Precondition("window dimension".into()));
        }
        let mask = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                bounds.iter().enumerate().all(|(a, &(lo, hi))| p[a] >= lo && p[a] < hi)
            })
            .collect::<Vec<_>>();
        if !mask.iter().any(|&m| m) {
            return Err(Error::Precondition(format!("window {bounds:?} does not intersect the grid")));
        }
        let label = bounds
            .iter()
            .map(|(lo, hi)| format!("[{lo}, {hi})"))
            .collect::<Vec<_>>()
            .join("x");
        Self::new(grid, mask, label, Basis::Position)
    }

    /// Cells whose polar angle about `center`, measured in `[start, start + 2 pi)`,
    /// falls in `[start, end)`. 2D only.
    pub fn sector(grid: &Grid, center: [f64; 2], start: f64, end: f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Precondition("sector projectors need a 2D grid".into()));
        }
        let mask = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let a = (p[1] - center[1]).atan2(p[0] - center[0]);
                let rel = (a - start).rem_euclid(2.0 * PI);
                rel < end - start
            })
            .collect::<Vec<_>>();
        if !mask.iter().any(|&m| m) {
            return Err(Error::Precondition("sector contains no cells".into()));
        }
        Self::new(grid, mask, format!("sector[{start:.4}, {end:.4})"), Basis::Position)
    }

    /// Momentum modes with `k_axis` in `[klo, khi)`.
    pub fn momentum_window(grid: &Grid, axis: usize, klo: f64, khi: f64) -> Result<Self> {
        if axis >= grid.dim() {
            return Err(Error::Precondition("momentum window axis".into()));
        }
        let k = grid.axis(axis).wavenumbers();
        let mask = (0..grid.len())
            .map(|i| {
                let kv = k[grid.unravel(i)[axis]];
                kv >= klo && kv < khi
            })
            .collect::<Vec<_>>();
        if !mask.iter().any(|&m| m) {
            return Err(Error::Precondition(format!(
                "momentum window [{klo}, {khi}) contains no lattice modes"
            )));
        }
        Self::new(grid, mask, format!("k{axis}[{klo}, {khi})"), Basis::Momentum)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `P psi`, not renormalized.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut amps = psi.amplitudes().to_vec();
        match self.basis {
            Basis::Position => mask_in_place(&mut amps, &self.mask),
            Basis::Momentum => {
                let s = Spectral::new(&self.grid);
                s.forward(&mut amps);
                mask_in_place(&mut amps, &self.mask);
                s.inverse(&mut amps);
            }
        }
        WaveFunction::from_amplitudes(self.grid.clone(), amps, psi.time())
    }

    /// Born weight `||P psi||^2`.
    pub fn weight(&self, psi: &WaveFunction) -> Result<f64> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(match self.basis {
            Basis::Position => masked_sum(psi.density().iter().copied(), &self.mask) * self.grid.cell_volume(),
            Basis::Momentum => {
                let hat = momentum_amplitudes(psi);
                let w = masked_sum(hat.iter().map(Complex64::norm_sqr), &self.mask);
                w * self.grid.cell_volume() / self.grid.len() as f64
            }
        })
    }
}

fn mask_in_place(amps: &mut [Complex64], mask: &[bool]) {
    for (z, &m) in amps.iter_mut().zip(mask) {
        if !m {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

fn masked_sum(values: impl Iterator<Item = f64>, mask: &[bool]) -> f64 {
    values.zip(mask).filter(|(_, &m)| m).map(|(v, _)| v).sum()
}

/// Unnormalized discrete Fourier coefficients of `psi` (FFT order).
pub fn momentum_amplitudes(psi: &WaveFunction) -> Vec<Complex64> {
    let mut hat = psi.amplitudes().to_vec();
    Spectral::new(psi.grid()).forward(&mut hat);
    hat
}

/// An exhaustive, exclusive set of projectors on one grid and basis.
#[derive(Clone, Debug)]
pub struct Partition {
    projectors: Vec<GridProjector>,
}

impl Partition {
    pub fn new(projectors: Vec<GridProjector>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidPartition("no projectors".into()))?;
        let grid = first.grid.clone();
        let basis = first.basis;
        let mut cover = vec![0u32; grid.len()];
        for p in &projectors {
            if p.grid != grid || p.basis != basis {
                return Err(Error::InvalidPartition("projectors on different grids or bases".into()));
            }
            for (c, &m) in cover.iter_mut().zip(&p.mask) {
                *c += m as u32;
            }
        }
        if cover.iter().any(|&c| c > 1) {
            return Err(Error::InvalidPartition("overlapping projectors".into()));
        }
        if cover.contains(&0) {
            return Err(Error::InvalidPartition("projectors do not cover the grid".into()));
        }
        Ok(Self { projectors })
    }

    /// Windows of the given width tiling `axis` from its lower edge; the last
    /// window absorbs any remainder. Empty windows are skipped.
    pub fn windows(grid: &Grid, axis: usize, width: f64) -> Result<Self> {
        if !(width > 0.0) || axis >= grid.dim() {
            return Err(Error::Precondition("window width must be positive".into()));
        }
        let ax = grid.axis(axis);
        let n = ((ax.length() / width).ceil() as usize).max(1);
        let mut out = Vec::new();
        for w in 0..n {
            let lo = ax.lo + w as f64 * width;
            let hi = if w + 1 == n { f64::INFINITY } else { lo + width };
            let mask: Vec<bool> = (0..grid.len())
                .map(|i| {
                    let x = ax.coord(grid.unravel(i)[axis]);
                    x >= lo - 1e-12 * width && x < hi - 1e-12 * width
                })
                .collect();
            if mask.iter().any(|&m| m) {
                out.push(GridProjector::new(grid, mask, format!("x{axis}[{lo}, {})", lo + width), Basis::Position)?);
            }
        }
        Self::new(out)
    }

    /// `n` equal angular sectors about `center`, the first starting at `offset`.
    pub fn sectors(grid: &Grid, center: [f64; 2], n: usize, offset: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("need at least one sector".into()));
        }
        let w = 2.0 * PI / n as f64;
        let ps = (0..n)
            .map(|s| {
                GridProjector::sector(grid, center, offset + s as f64 * w, offset + (s + 1) as f64 * w)
                    .map(|p| p.with_label(format!("sector{s}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ps)
    }

    /// Momentum windows of width `width` tiling the `axis` wavenumber lattice.
    pub fn momentum_windows(grid: &Grid, axis: usize, width: f64) -> Result<Self> {
        let ax = grid.axis(axis);
        let kmin = -(ax.points as f64 / 2.0) * ax.dk();
        let kmax = (ax.points as f64 / 2.0 - 1.0) * ax.dk();
        let n = (((kmax - kmin) / width).floor() as usize) + 1;
        let mut out = Vec::new();
        for w in 0..n {
            let lo = kmin - 0.5 * ax.dk() + w as f64 * width;
            let hi = if w + 1 == n { f64::INFINITY } else { lo + width };
            let lo = if w == 0 { f64::NEG_INFINITY } else { lo };
            if let Ok(p) = GridProjector::momentum_window(grid, axis, lo, hi) {
                out.push(p);
            }
        }
        Self::new(out)
    }

    pub fn projectors(&self) -> &[GridProjector] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

/// Born weights `p_k = ||P_k psi||^2` of every member of the partition.
pub fn born_probabilities(psi: &WaveFunction, partition: &Partition) -> Result<Vec<f64>> {
    let first = &partition.projectors[0];
    if psi.grid() != &first.grid {
        return Err(Error::GridMismatch);
    }
    match first.basis {
        Basis::Position => {
            let rho = psi.density();
            let dv = psi.grid().cell_volume();
            Ok(partition
                .projectors
                .iter()
                .map(|p| masked_sum(rho.iter().copied(), &p.mask) * dv)
                .collect())
        }
        Basis::Momentum => {
            let hat = momentum_amplitudes(psi);
            let scale = psi.grid().cell_volume() / psi.grid().len() as f64;
            Ok(partition
                .projectors
                .iter()
                .map(|p| masked_sum(hat.iter().map(Complex64::norm_sqr), &p.mask) * scale)
                .collect())
        }
    }
}

/// Replaces `psi` by `P psi / ||P psi||`.
pub fn collapse(psi: &WaveFunction, projector: &GridProjector) -> Result<WaveFunction> {
    let w = projector.weight(psi)?;
    if !(w > NULL_WEIGHT) {
        return Err(Error::NullWeight {
            label: projector.label.clone(),
            weight: w,
        });
    }
    projector.apply(psi)?.normalize()
}

/// Index `k` with `cum[k-1] <= u < cum[k]`, where `cum` are the running sums
/// of `probs`. Draws past the final sum (roundoff) land on the last nonzero bin.
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Result of one simulated measurement.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub label: String,
    pub probability: f64,
    pub post_state: WaveFunction,
    pub seed: u64,
    pub stream: u64,
}

/// JSON form of a [`MeasurementOutcome`]; the post-state is written separately
/// in the snapshot format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub index: usize,
    pub label: String,
    pub probability: f64,
    pub seed: u64,
    pub stream: u64,
    pub time: f64,
    pub post_state_file: Option<String>,
}

impl MeasurementOutcome {
    pub fn record(&self, post_state_file: Option<String>) -> OutcomeRecord {
        OutcomeRecord {
            index: self.index,
            label: self.label.clone(),
            probability: self.probability,
            seed: self.seed,
            stream: self.stream,
            time: self.post_state.time(),
            post_state_file,
        }
    }
}

/// Draws an outcome with Born probabilities and collapses onto it.
pub fn sample_outcome(psi: &WaveFunction, partition: &Partition, rng: &mut SeededRng) -> Result<MeasurementOutcome> {
    let probs = born_probabilities(psi, partition)?;
    let u = rng.uniform();
    let index = inverse_cdf(&probs, u);
    let projector = &partition.projectors[index];
    Ok(MeasurementOutcome {
        index,
        label: projector.label.clone(),
        probability: probs[index],
        post_state: collapse(psi, projector)?,
        seed: rng.seed(),
        stream: rng.stream(),
    })
}

/// Per-axis means and standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Moments of `|psi(x)|^2` per axis.
pub fn position_stats(psi: &WaveFunction) -> Moments {
    let grid = psi.grid();
    let coords: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.coords()).collect();
    weighted_moments(grid, &psi.density(), &coords)
}

/// Moments of `|psi~(k)|^2` per axis.
pub fn momentum_stats(psi: &WaveFunction) -> Moments {
    let grid = psi.grid();
    let hat = momentum_amplitudes(psi);
    let w: Vec<f64> = hat.iter().map(Complex64::norm_sqr).collect();
    let ks: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.wavenumbers()).collect();
    weighted_moments(grid, &w, &ks)
}

/// Momentum covariance matrix (row-major `dim x dim`) with the means.
pub fn momentum_covariance(psi: &WaveFunction) -> (Vec<f64>, Vec<f64>) {
    let grid = psi.grid();
    let d = grid.dim();
    let hat = momentum_amplitudes(psi);
    let ks: Vec<Vec<f64>> = grid.axes().iter().map(|a| a.wavenumbers()).collect();
    let total: f64 = hat.iter().map(Complex64::norm_sqr).sum();
    let mut mean = vec![0.0; d];
    for (f, z) in hat.iter().enumerate() {
        let idx = grid.unravel(f);
        let w = z.norm_sqr() / total;
        for a in 0..d {
            mean[a] += w * ks[a][idx[a]];
        }
    }
    let mut cov = vec![0.0; d * d];
    for (f, z) in hat.iter().enumerate() {
        let idx = grid.unravel(f);
        let w = z.norm_sqr() / total;
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += w * (ks[a][idx[a]] - mean[a]) * (ks[b][idx[b]] - mean[b]);
            }
        }
    }
    (mean, cov)
}

fn weighted_moments(grid: &Grid, weights: &[f64], coords: &[Vec<f64>]) -> Moments {
    let d = grid.dim();
    let total: f64 = weights.iter().sum();
    let mut mean = vec![0.0; d];
    let mut second = vec![0.0; d];
    for (f, &w) in weights.iter().enumerate() {
        let idx = grid.unravel(f);
        for a in 0..d {
            let x = coords[a][idx[a]];
            mean[a] += w * x;
            second[a] += w * x * x;
        }
    }
    let mut std = vec![0.0; d];
    for a in 0..d {
        mean[a] /= total;
        let var = second[a] / total - mean[a] * mean[a];
        std[a] = var.max(0.0).sqrt();
    }
    Moments { mean, std }
}

/// Evolves `psi0` to `total`, collapses onto `projector`, evolves back to the
/// initial time and returns `|<psi0|psi_reconstructed>|`.
///
/// Because the propagation is exactly unitary, the result equals
/// `||P psi(T)||`: the weight of the discarded branches is the fidelity lost.
pub fn reconstruction_fidelity(
    psi0: &WaveFunction,
    ham: &Hamiltonian,
    total: f64,
    projector: &GridProjector,
    dt: f64,
) -> Result<f64> {
    let n = step_count(total, dt)?;
    let mut psi_t = psi0.clone();
    advance(&mut psi_t, &Propagator::new(ham, dt)?, n)?;
    let collapsed = collapse(&psi_t, projector)?;
    let back = reverse_evolve(&collapsed, ham, total, dt)?;
    psi0.fidelity(&back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{gaussian_packet, Packet};

    fn grid() -> Grid {
        Grid::line(-10.0, 10.0, 256).unwrap()
    }

    #[test]
    fn window_counts() {
        let g = grid();
        assert_eq!(GridProjector::window(&g, &[(-10.0, 10.0)]).unwrap().count(), 256);
        assert_eq!(GridProjector::window(&g, &[(0.0, 10.0)]).unwrap().count(), 128);
        assert!(GridProjector::window(&g, &[(100.0, 200.0)]).is_err());
    }

    #[test]
    fn partition_validation() {
        let g = grid();
        let a = GridProjector::window(&g, &[(-10.0, 0.0)]).unwrap();
        let b = GridProjector::window(&g, &[(0.0, 10.0)]).unwrap();
        let c = GridProjector::window(&g, &[(-1.0, 10.0)]).unwrap();
        assert!(Partition::new(vec![a.clone(), b]).is_ok());
        assert!(matches!(Partition::new(vec![a.clone(), c]), Err(Error::InvalidPartition(_))));
        assert!(matches!(Partition::new(vec![a]), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn born_full_and_half() {
        let g = grid();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
        let full = Partition::new(vec![GridProjector::window(&g, &[(-10.0, 10.0)]).unwrap()]).unwrap();
        let p = born_probabilities(&psi, &full).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);

        // centered on a cell center, the half-space split is exactly symmetric
        // only when the packet is centered between cells
        let h = g.spacing()[0];
        let psi = gaussian_packet(&g, &Packet::new_1d(-h / 2.0, 1.0, 0.0)).unwrap();
        let halves = Partition::new(vec![
            GridProjector::window(&g, &[(-10.0, 0.0)]).unwrap(),
            GridProjector::window(&g, &[(0.0, 10.0)]).unwrap(),
        ])
        .unwrap();
        let p = born_probabilities(&psi, &halves).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9, "{p:?}");
    }

    #[test]
    fn collapse_behaviour() {
        let g = grid();
        let h = g.spacing()[0];
        let psi = gaussian_packet(&g, &Packet::new_1d(-h / 2.0, 1.0, 0.0)).unwrap();
        let full = GridProjector::window(&g, &[(-10.0, 10.0)]).unwrap();
        let same = collapse(&psi, &full).unwrap();
        assert!((psi.fidelity(&same).unwrap() - 1.0).abs() < 1e-14);

        let half = GridProjector::window(&g, &[(0.0, 10.0)]).unwrap();
        assert!((half.apply(&psi).unwrap().norm() - 0.5f64.sqrt()).abs() < 1e-6);
        let c = collapse(&psi, &half).unwrap();
        assert!((c.norm() - 1.0).abs() < 1e-12);
        assert_eq!(c.time(), psi.time());
        for (z, &m) in c.amplitudes().iter().zip(half.mask()) {
            if !m {
                assert_eq!(z.norm(), 0.0);
            }
        }

        let far = GridProjector::window(&grid(), &[(9.0, 10.0)]).unwrap();
        let narrow = gaussian_packet(&g, &Packet::new_1d(-5.0, 0.3, 0.0)).unwrap();
        assert!(matches!(collapse(&narrow, &far), Err(Error::NullWeight { .. })));
    }

    #[test]
    fn inverse_cdf_convention() {
        let p = [0.25, 0.25, 0.5];
        assert_eq!(inverse_cdf(&p, 0.0), 0);
        assert_eq!(inverse_cdf(&p, 0.2499), 0);
        assert_eq!(inverse_cdf(&p, 0.25), 1);
        assert_eq!(inverse_cdf(&p, 0.5), 2);
        assert_eq!(inverse_cdf(&p, 0.9999999), 2);
        assert_eq!(inverse_cdf(&[0.5, 0.5, 0.0], 1.0), 1);
    }

    #[test]
    fn deterministic_partition_always_index_zero() {
        let g = grid();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
        let full = Partition::new(vec![GridProjector::window(&g, &[(-10.0, 10.0)]).unwrap()]).unwrap();
        let mut rng = SeededRng::new(3);
        for _ in 0..20 {
            assert_eq!(sample_outcome(&psi, &full, &mut rng).unwrap().index, 0);
        }
    }

    #[test]
    fn momentum_window_weights_match_moments() {
        let g = grid();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 1.0)).unwrap();
        let part = Partition::momentum_windows(&g, 0, 0.5).unwrap();
        let p = born_probabilities(&psi, &part).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let win = GridProjector::momentum_window(&g, 0, 0.0, 2.0).unwrap();
        let w = win.weight(&psi).unwrap();
        let applied = win.apply(&psi).unwrap().norm_sq();
        assert!((w - applied).abs() < 1e-12);
    }
}
