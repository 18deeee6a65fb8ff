//! Discrete Fourier transforms over a [`Grid`] and spectral derivatives.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Cached FFT plans for one grid. Transforms run row-parallel; every row is
/// processed by the same plan, so results do not depend on the thread count.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Wavenumbers per axis with the Nyquist entry zeroed, for odd derivatives.
    deriv_k: Vec<Vec<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_forward(a.points))
            .collect();
        let inverse = grid
            .axes()
            .iter()
            .map(|a| planner.plan_fft_inverse(a.points))
            .collect();
        let deriv_k = grid
            .axes()
            .iter()
            .map(|a| {
                let mut k = a.wavenumbers();
                k[a.points / 2] = 0.0;
                k
            })
            .collect();
        Self {
            grid: grid.clone(),
            forward,
            inverse,
            deriv_k,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized so that `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.grid.len(), "buffer does not match grid");
        match self.grid.dim() {
            1 => plans[0].process(data),
            _ => {
                let nx = self.grid.axis(0).points;
                let ny = self.grid.axis(1).points;
                rows(data, ny, &plans[1]);
                let mut t = transpose(data, nx, ny);
                rows(&mut t, nx, &plans[0]);
                let back = transpose(&t, ny, nx);
                data.copy_from_slice(&back);
            }
        }
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, psi: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut buf = psi.to_vec();
        self.forward(&mut buf);
        self.apply_ik(&mut buf, axis);
        self.inverse(&mut buf);
        buf
    }

    /// All partial derivatives, sharing one forward transform.
    pub fn gradient(&self, psi: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut hat = psi.to_vec();
        self.forward(&mut hat);
        (0..self.grid.dim())
            .map(|a| {
                let mut buf = hat.clone();
                self.apply_ik(&mut buf, a);
                self.inverse(&mut buf);
                buf
            })
            .collect()
    }

    fn apply_ik(&self, hat: &mut [Complex64], axis: usize) {
        let k = &self.deriv_k[axis];
        let grid = &self.grid;
        hat.par_iter_mut().enumerate().for_each(|(f, z)| {
            let idx = grid.unravel(f);
            *z *= Complex64::new(0.0, k[idx[axis]]);
        });
    }
}

fn rows(data: &mut [Complex64], len: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn transpose(data: &[Complex64], nr: usize, nc: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(nr).enumerate().for_each(|(c, col)| {
        for (r, z) in col.iter_mut().enumerate() {
            *z = data[r * nc + c];
        }
    });
    out
}
