//! Unitary time evolution under `H = p^2/2m + V(x)` by symmetric split-step
//! (Strang) spectral propagation, with `psi(t) = exp(-iHt) psi(0)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};
use crate::spectral::Spectral;
use crate::wave::WaveFunction;

/// Tolerance used when checking that an input state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A potential and a particle mass (hbar = 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub potential: Potential,
    pub mass: f64,
}

impl Hamiltonian {
    pub fn new(potential: Potential, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Precondition(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { potential, mass })
    }

    /// Free particle of unit mass.
    pub fn free(grid: &crate::grid::Grid) -> Self {
        Self {
            potential: Potential::free(grid),
            mass: 1.0,
        }
    }
}

/// Precomputed phase factors for one step size.
///
/// Each factor has unit modulus, so a step is unitary up to roundoff and the
/// propagator for `-dt` is its exact inverse.
#[derive(Clone, Debug)]
pub struct Propagator {
    spectral: Spectral,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    absorber: Option<Vec<f64>>,
    dt: f64,
}

impl Propagator {
    pub fn new(ham: &Hamiltonian, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("time step must be nonzero, got {dt}")));
        }
        let grid = ham.potential.grid();
        let half_potential = ham
            .potential
            .values()
            .iter()
            .map(|v| Complex64::from_polar(1.0, -v * dt / 2.0))
            .collect();
        let kinetic = grid
            .k_squared()
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0, -k2 * dt / (2.0 * ham.mass)))
            .collect();
        Ok(Self {
            spectral: Spectral::new(grid),
            half_potential,
            kinetic,
            absorber: None,
            dt,
        })
    }

    /// Adds a cosine-ramp absorbing mask of the given width at every edge.
    /// The mask is applied after each step and makes the evolution non-unitary.
    pub fn with_absorber(mut self, width: f64) -> Self {
        let grid = self.spectral.grid().clone();
        let mask = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                grid.axes()
                    .iter()
                    .enumerate()
                    .map(|(a, ax)| {
                        let d = (p[a] - ax.lo).min(ax.hi - p[a]);
                        if d >= width {
                            1.0
                        } else {
                            (std::f64::consts::FRAC_PI_2 * d / width).sin().powf(0.125)
                        }
                    })
                    .product()
            })
            .collect();
        self.absorber = Some(mask);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_absorbing(&self) -> bool {
        self.absorber.is_some()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Advances `psi` by one step of `dt` in place.
    pub fn step(&self, psi: &mut WaveFunction) -> Result<()> {
        if psi.grid() != self.spectral.grid() {
            return Err(Error::GridMismatch);
        }
        let t = psi.time() + self.dt;
        self.apply(psi.amplitudes_mut());
        psi.set_time(t);
        Ok(())
    }

    pub(crate) fn apply(&self, amps: &mut [Complex64]) {
        mul_in_place(amps, &self.half_potential);
        self.spectral.forward(amps);
        mul_in_place(amps, &self.kinetic);
        self.spectral.inverse(amps);
        mul_in_place(amps, &self.half_potential);
        if let Some(mask) = &self.absorber {
            amps.par_iter_mut().zip(mask).for_each(|(z, m)| *z *= m);
        }
    }
}

fn mul_in_place(amps: &mut [Complex64], factors: &[Complex64]) {
    amps.par_iter_mut().zip(factors).for_each(|(z, f)| *z *= f);
}

/// One split step: `psi' = e^{-iV dt/2} F^-1 e^{-i k^2 dt/2m} F e^{-iV dt/2} psi`.
/// Negative `dt` evolves backward.
pub fn step_split(psi: &WaveFunction, ham: &Hamiltonian, dt: f64) -> Result<WaveFunction> {
    let prop = Propagator::new(ham, dt)?;
    let mut out = psi.clone();
    prop.step(&mut out)?;
    Ok(out)
}

/// Time-ordered snapshots of an evolution.
#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    pub snapshots: Vec<WaveFunction>,
    /// Integration step.
    pub dt: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub potential: PotentialKind,
    pub mass: f64,
    /// Set when an absorbing mask was active; such records are not unitary.
    pub absorbing: bool,
}

impl EvolutionRecord {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(WaveFunction::time).collect()
    }

    pub fn first(&self) -> &WaveFunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &WaveFunction {
        self.snapshots.last().expect("record is never empty")
    }
}

/// Number of `dt` steps in `total`, which must be an integral multiple.
pub fn step_count(total: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(total >= 0.0) {
        return Err(Error::Precondition(format!(
            "need T >= 0 and dt > 0, got T={total}, dt={dt}"
        )));
    }
    let n = total / dt;
    let r = n.round();
    if (n - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Precondition(format!(
            "T={total} is not an integral number of steps dt={dt}"
        )));
    }
    Ok(r as usize)
}

fn check_normalized(psi: &WaveFunction) -> Result<()> {
    let n = psi.norm_sq();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Precondition(format!("state not normalized (norm^2 = {n})")));
    }
    Ok(())
}

/// Evolves `psi0` for `total` time in steps of `dt`, storing every `stride`-th
/// state. The first and final states are always stored.
pub fn evolve(
    psi0: &WaveFunction,
    ham: &Hamiltonian,
    total: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionRecord> {
    evolve_with(psi0, ham, &Propagator::new(ham, dt)?, total, stride)
}

/// As [`evolve`], with a caller-built propagator (e.g. one with an absorber).
pub fn evolve_with(
    psi0: &WaveFunction,
    ham: &Hamiltonian,
    prop: &Propagator,
    total: f64,
    stride: usize,
) -> Result<EvolutionRecord> {
    check_normalized(psi0)?;
    if stride == 0 {
        return Err(Error::Precondition("snapshot stride must be >= 1".into()));
    }
    let dt = prop.dt();
    let n = step_count(total, dt)?;
    let t0 = psi0.time();
    let mut psi = psi0.clone();
    let mut snapshots = vec![psi0.clone()];
    for s in 1..=n {
        prop.step(&mut psi)?;
        psi.set_time(t0 + s as f64 * dt);
        if s % stride == 0 || s == n {
            snapshots.push(psi.clone());
        }
    }
    Ok(EvolutionRecord {
        snapshots,
        dt,
        stride,
        potential: ham.potential.kind().clone(),
        mass: ham.mass,
        absorbing: prop.is_absorbing(),
    })
}

/// Applies the inverse propagator `total / dt` times, undoing [`evolve`].
pub fn reverse_evolve(psi_t: &WaveFunction, ham: &Hamiltonian, total: f64, dt: f64) -> Result<WaveFunction> {
    let n = step_count(total, dt)?;
    let prop = Propagator::new(ham, -dt)?;
    let t_end = psi_t.time();
    let mut psi = psi_t.clone();
    for s in 1..=n {
        prop.step(&mut psi)?;
        psi.set_time(t_end - s as f64 * dt);
    }
    Ok(psi)
}

/// Runs `steps` steps of `prop` on `psi` in place, keeping the clock exact.
pub fn advance(psi: &mut WaveFunction, prop: &Propagator, steps: usize) -> Result<()> {
    let t0 = psi.time();
    for s in 1..=steps {
        prop.step(psi)?;
        psi.set_time(t0 + s as f64 * prop.dt());
    }
    Ok(())
}
