//! Uniform periodic grids in one or two dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total number of cells of a grid (2^22).
pub const DEFAULT_MAX_CELLS: usize = 1 << 22;

/// Minimum number of points per axis.
pub const MIN_POINTS: usize = 16;

/// One axis of a [`Grid`]: the half-open periodic interval `[lo, hi)`
/// sampled at `points` cell centers `lo + i * spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.points as f64
    }

    /// Coordinate of the `i`-th cell center.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| self.lo + i as f64 * h).collect()
    }

    /// Angular wavenumbers in FFT order, `2*pi*j/L` with the Nyquist mode at
    /// `-points/2`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = 2.0 * std::f64::consts::PI / self.length();
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n })
            .map(|j| j as f64 * dk)
            .collect()
    }

    /// Wavenumber resolution `2*pi/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length()
    }

    /// Largest representable wavenumber magnitude, `pi / spacing`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Wrap `x` into `[lo, hi)`. Returns the wrapped value and whether a wrap
    /// occurred.
    pub fn wrap(&self, x: f64) -> (f64, bool) {
        if x >= self.lo && x < self.hi {
            return (x, false);
        }
        let l = self.length();
        let w = self.lo + (x - self.lo).rem_euclid(l);
        (if w >= self.hi { self.lo } else { w }, true)
    }
}

/// A uniform, periodic 1D or 2D grid. Cells are stored row-major: for 2D
/// the flat index is `i * ny + j` with `i` along axis 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    /// Builds a grid with the default cell cap.
    pub fn new(extents: &[(f64, f64)], points: &[usize]) -> Result<Self> {
        Self::with_max_cells(extents, points, DEFAULT_MAX_CELLS)
    }

    pub fn with_max_cells(extents: &[(f64, f64)], points: &[usize], max_cells: usize) -> Result<Self> {
        let dim = extents.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} extents but {} point counts",
                dim,
                points.len()
            )));
        }
        let mut axes = Vec::with_capacity(dim);
        for (a, (&(lo, hi), &n)) in extents.iter().zip(points).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidGrid(format!(
                    "degenerate extent [{lo}, {hi}] on axis {a}"
                )));
            }
            if !n.is_power_of_two() || n < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: points must be a power of two >= {MIN_POINTS}, got {n}"
                )));
            }
            axes.push(Axis { lo, hi, points: n });
        }
        let cells: usize = axes.iter().map(|a| a.points).product();
        if cells > max_cells {
            return Err(Error::InvalidGrid(format!(
                "{cells} cells exceeds the cap of {max_cells}"
            )));
        }
        Ok(Self { axes })
    }

    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(&[(lo, hi)], &[points])
    }

    pub fn square(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(&[(lo, hi), (lo, hi)], &[points, points])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Multi-index of a flat cell index.
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [flat, 0],
            _ => {
                let ny = self.axes[1].points;
                [flat / ny, flat % ny]
            }
        }
    }

    /// Cell-center coordinates of a flat index; unused trailing entries are 0.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = self.unravel(flat);
        let mut p = [0.0; 2];
        for (a, axis) in self.axes.iter().enumerate() {
            p[a] = axis.coord(idx[a]);
        }
        p
    }

    /// `|k|^2` for every cell in FFT order.
    pub fn k_squared(&self) -> Vec<f64> {
        let ks: Vec<Vec<f64>> = self.axes.iter().map(Axis::wavenumbers).collect();
        (0..self.len())
            .map(|f| {
                let idx = self.unravel(f);
                ks.iter().enumerate().map(|(a, k)| k[idx[a]] * k[idx[a]]).sum()
            })
            .collect()
    }

    /// Whether `x` lies inside the extent on every axis.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| v >= a.lo && v < a.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_1d() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        assert_eq!(g.spacing(), vec![0.078125]);
        assert_eq!(g.len(), 256);
    }

    #[test]
    fn spacing_2d() {
        let g = Grid::square(-10.0, 10.0, 128).unwrap();
        assert_eq!(g.len(), 16384);
        assert_eq!(g.spacing(), vec![0.15625, 0.15625]);
    }

    #[test]
    fn rejects_degenerate_extent() {
        assert!(matches!(Grid::line(0.0, 0.0, 64), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Grid::line(0.0, 1.0, 100).is_err());
        assert!(Grid::line(0.0, 1.0, 8).is_err());
    }

    #[test]
    fn rejects_cell_cap() {
        assert!(Grid::with_max_cells(&[(0.0, 1.0), (0.0, 1.0)], &[64, 64], 1024).is_err());
        assert!(Grid::square(0.0, 1.0, 4096).is_err());
    }

    #[test]
    fn wavenumbers_fft_order() {
        let a = Grid::line(0.0, 2.0 * std::f64::consts::PI, 16).unwrap().axes()[0];
        let k = a.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[1], 1.0);
        assert_eq!(k[7], 7.0);
        assert_eq!(k[8], -8.0);
        assert_eq!(k[15], -1.0);
    }

    #[test]
    fn wrap_is_periodic() {
        let a = Grid::line(-1.0, 1.0, 16).unwrap().axes()[0];
        assert_eq!(a.wrap(0.5), (0.5, false));
        let (w, wrapped) = a.wrap(1.25);
        assert!(wrapped);
        assert!((w + 0.75).abs() < 1e-15);
        let (w, _) = a.wrap(-1.5);
        assert!((w - 0.5).abs() < 1e-15);
    }
}
