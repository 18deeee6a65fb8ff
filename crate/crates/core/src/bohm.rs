//! Bohmian mechanics: guidance velocities `v = J / rho`, trajectories
//! integrated with RK4 while the wavefunction is co-stepped, ensembles drawn
//! from `|psi|^2`, and the statistics used to check equivariance.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::current_with;
use crate::grid::Grid;
use crate::propagate::{step_count, EvolutionRecord, Hamiltonian, Propagator};
use crate::rng::SeededRng;
use crate::spectral::Spectral;
use crate::wave::WaveFunction;

/// Default node floor, relative to the mean density over the grid.
pub const DEFAULT_NODE_FLOOR: f64 = 1e-12;

/// Density and current on the grid at one instant.
#[derive(Clone, Debug)]
pub struct GuidanceField {
    grid: Grid,
    time: f64,
    rho: Vec<f64>,
    current: Vec<Vec<f64>>,
    floor: f64,
}

impl GuidanceField {
    pub fn new(spectral: &Spectral, psi: &WaveFunction, mass: f64, rel_floor: f64) -> Self {
        let rho = psi.density();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        Self {
            grid: psi.grid().clone(),
            time: psi.time(),
            current: current_with(spectral, psi.amplitudes(), mass),
            rho,
            floor: rel_floor * mean,
        }
    }

    pub fn from_wave(psi: &WaveFunction, mass: f64) -> Self {
        Self::new(&Spectral::new(psi.grid()), psi, mass, DEFAULT_NODE_FLOOR)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Multilinear interpolation of `rho` and `J` at `x` (periodic).
    /// Returns `rho` and writes the current components into `j`.
    fn sample(&self, x: &[f64], j: &mut [f64; 2]) -> f64 {
        let (cells, weights) = stencil(&self.grid, x);
        let mut rho = 0.0;
        *j = [0.0; 2];
        for (&c, &w) in cells.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            rho += w * self.rho[c];
            for (a, comp) in self.current.iter().enumerate() {
                j[a] += w * comp[c];
            }
        }
        rho
    }

    /// Guidance velocity `J(x) / rho(x)`.
    pub fn velocity(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut j = [0.0; 2];
        let rho = self.sample(x, &mut j);
        if !(rho > self.floor) {
            return Err(Error::Node {
                time: self.time,
                position: x.to_vec(),
                density: rho,
            });
        }
        Ok(j[..self.grid.dim()].iter().map(|v| v / rho).collect())
    }
}

/// Cells and weights of the multilinear stencil around `x`.
fn stencil(grid: &Grid, x: &[f64]) -> ([usize; 4], [f64; 4]) {
    let mut base = [0usize; 2];
    let mut next = [0usize; 2];
    let mut frac = [0.0; 2];
    for (a, ax) in grid.axes().iter().enumerate() {
        let u = (x[a] - ax.lo) / ax.spacing();
        let f = u.floor();
        let i = (f as i64).rem_euclid(ax.points as i64) as usize;
        base[a] = i;
        next[a] = (i + 1) % ax.points;
        frac[a] = u - f;
    }
    match grid.dim() {
        1 => ([base[0], next[0], 0, 0], [1.0 - frac[0], frac[0], 0.0, 0.0]),
        _ => {
            let ny = grid.axis(1).points;
            let (fx, fy) = (frac[0], frac[1]);
            (
                [
                    base[0] * ny + base[1],
                    base[0] * ny + next[1],
                    next[0] * ny + base[1],
                    next[0] * ny + next[1],
                ],
                [
                    (1.0 - fx) * (1.0 - fy),
                    (1.0 - fx) * fy,
                    fx * (1.0 - fy),
                    fx * fy,
                ],
            )
        }
    }
}

/// Guidance velocity of `psi` at `x`.
pub fn velocity(psi: &WaveFunction, mass: f64, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != psi.grid().dim() {
        return Err(Error::Precondition("position dimension".into()));
    }
    GuidanceField::from_wave(psi, mass).velocity(x)
}

/// Velocities `(v1, v2)` of two particles on a line whose joint wavefunction
/// lives on the 2D configuration grid `(x1, x2)`. The density is shared; each
/// current uses the gradient along its own particle's axis.
pub fn two_particle_velocity(psi: &WaveFunction, mass: f64, x1: f64, x2: f64) -> Result<(f64, f64)> {
    if psi.grid().dim() != 2 {
        return Err(Error::Precondition("two-particle states live on a 2D configuration grid".into()));
    }
    let v = velocity(psi, mass, &[x1, x2])?;
    Ok((v[0], v[1]))
}

/// Position at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BohmState {
    pub position: Vec<f64>,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Complete,
    /// Integration stopped because the density fell below the node floor.
    NodeAbort { time: f64, position: Vec<f64> },
}

/// A Bohmian path sampled every `stride` integration steps.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dim: usize,
    t0: f64,
    /// Signed integration step.
    dt: f64,
    stride: usize,
    points: Vec<f64>,
    pub status: TrajectoryStatus,
    pub node_encounters: usize,
    /// Number of periodic wraps applied.
    pub wraps: usize,
}

impl Trajectory {
    fn start(x0: &[f64], t0: f64, dt: f64, stride: usize) -> Self {
        Self {
            dim: x0.len(),
            t0,
            dt,
            stride,
            points: x0.to_vec(),
            status: TrajectoryStatus::Complete,
            node_encounters: 0,
            wraps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Complete
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + (i * self.stride) as f64 * self.dt
    }

    pub fn initial(&self) -> &[f64] {
        self.position(0)
    }

    pub fn last(&self) -> &[f64] {
        self.position(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = BohmState> + '_ {
        (0..self.len()).map(|i| BohmState {
            position: self.position(i).to_vec(),
            time: self.time(i),
        })
    }
}

/// Options for co-stepped trajectory integration.
#[derive(Clone, Debug)]
pub struct IntegrationOptions {
    /// Store every `path_stride`-th position (the final one is always kept).
    pub path_stride: usize,
    /// Store a wavefunction snapshot every this many steps (0: first and last only).
    pub snapshot_stride: usize,
    /// Node floor relative to the mean density.
    pub node_floor: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            path_stride: 1,
            snapshot_stride: 0,
            node_floor: DEFAULT_NODE_FLOOR,
        }
    }
}

/// Output of [`integrate_many`].
#[derive(Clone, Debug)]
pub struct CoStepResult {
    pub trajectories: Vec<Trajectory>,
    /// Wavefunction snapshots at the stored times (always includes both ends).
    pub record: EvolutionRecord,
}

impl CoStepResult {
    pub fn final_state(&self) -> &WaveFunction {
        self.record.last()
    }
}

/// Integrates `dX/dt = J/rho` for every start point from `psi.time()` to `t1`
/// (earlier or later) with classical RK4, co-stepping the wavefunction in
/// half steps so that the fields at `t`, `t + dt/2` and `t + dt` are exact
/// split-step states. Velocities at intermediate times would be blended
/// linearly between adjacent half-step fields.
pub fn integrate_many(
    psi: &WaveFunction,
    ham: &Hamiltonian,
    starts: &[Vec<f64>],
    t1: f64,
    dt: f64,
    opts: &IntegrationOptions,
) -> Result<CoStepResult> {
    let grid = psi.grid().clone();
    for x in starts {
        if !grid.contains(x) {
            return Err(Error::Precondition(format!("start {x:?} outside the grid extent")));
        }
    }
    let t0 = psi.time();
    let n = step_count((t1 - t0).abs(), dt)?;
    let h = if t1 >= t0 { dt } else { -dt };
    let path_stride = opts.path_stride.max(1);
    let half = Propagator::new(ham, h / 2.0)?;
    let spectral = half.spectral().clone();
    let field = |w: &WaveFunction| GuidanceField::new(&spectral, w, ham.mass, opts.node_floor);

    let mut state = psi.clone();
    let mut f0 = field(&state);
    let mut trajectories: Vec<Trajectory> = starts
        .iter()
        .map(|x| Trajectory::start(x, t0, h, path_stride))
        .collect();
    // the initial positions must not sit on a node
    trajectories.par_iter_mut().for_each(|tr| {
        if let Err(Error::Node { time, position, .. }) = f0.velocity(tr.initial()) {
            tr.status = TrajectoryStatus::NodeAbort { time, position };
            tr.node_encounters += 1;
        }
    });
    let mut current: Vec<Vec<f64>> = starts.to_vec();
    let mut snapshots = vec![state.clone()];

    for s in 1..=n {
        half.step(&mut state)?;
        state.set_time(t0 + (2 * s - 1) as f64 * h / 2.0);
        let f_mid = field(&state);
        half.step(&mut state)?;
        state.set_time(t0 + s as f64 * h);
        let f_end = field(&state);
        let window = FieldWindow {
            frames: [&f0, &f_mid, &f_end],
        };
        let store = s % path_stride == 0 || s == n;
        trajectories
            .par_iter_mut()
            .zip(current.par_iter_mut())
            .for_each(|(tr, x)| {
                if !tr.is_complete() {
                    return;
                }
                match rk4_step(&window, x, h) {
                    Ok(next) => {
                        let mut wrapped = false;
                        for (a, ax) in grid.axes().iter().enumerate() {
                            let (w, did) = ax.wrap(next[a]);
                            x[a] = w;
                            wrapped |= did;
                        }
                        tr.wraps += wrapped as usize;
                        if store {
                            tr.points.extend_from_slice(x);
                        }
                    }
                    Err(Error::Node { time, position, .. }) => {
                        tr.status = TrajectoryStatus::NodeAbort { time, position };
                        tr.node_encounters += 1;
                    }
                    Err(_) => unreachable!("rk4 only reports nodes"),
                }
            });
        let snap = s == n || (opts.snapshot_stride > 0 && s % opts.snapshot_stride == 0);
        if snap {
            snapshots.push(state.clone());
        }
        f0 = f_end;
    }
    let stride = if opts.snapshot_stride == 0 { n.max(1) } else { opts.snapshot_stride };
    Ok(CoStepResult {
        trajectories,
        record: EvolutionRecord {
            snapshots,
            dt: h,
            stride,
            potential: ham.potential.kind().clone(),
            mass: ham.mass,
            absorbing: false,
        },
    })
}

/// Fields at the start, midpoint and end of one step.
struct FieldWindow<'a> {
    frames: [&'a GuidanceField; 3],
}

impl FieldWindow<'_> {
    /// Velocity at fraction `theta` of the step, blending `rho` and `J`
    /// linearly in time between the two surrounding frames.
    fn velocity(&self, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
        let (a, b, w) = if theta <= 0.5 {
            (self.frames[0], self.frames[1], 2.0 * theta)
        } else {
            (self.frames[1], self.frames[2], 2.0 * theta - 1.0)
        };
        if w == 0.0 {
            return a.velocity(x);
        }
        if w == 1.0 {
            return b.velocity(x);
        }
        let mut ja = [0.0; 2];
        let mut jb = [0.0; 2];
        let ra = a.sample(x, &mut ja);
        let rb = b.sample(x, &mut jb);
        let rho = (1.0 - w) * ra + w * rb;
        let floor = (1.0 - w) * a.floor + w * b.floor;
        if !(rho > floor) {
            return Err(Error::Node {
                time: (1.0 - w) * a.time + w * b.time,
                position: x.to_vec(),
                density: rho,
            });
        }
        Ok((0..a.grid.dim())
            .map(|d| ((1.0 - w) * ja[d] + w * jb[d]) / rho)
            .collect())
    }
}

fn rk4_step(window: &FieldWindow<'_>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = window.velocity(0.0, x)?;
    let k2 = window.velocity(0.5, &axpy(x, &k1, h / 2.0))?;
    let k3 = window.velocity(0.5, &axpy(x, &k2, h / 2.0))?;
    let k4 = window.velocity(1.0, &axpy(x, &k3, h))?;
    Ok((0..x.len())
        .map(|d| x[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
        .collect())
}

/// Integrates a single trajectory from `(x0, psi.time())` to `t1`.
pub fn integrate_trajectory(psi: &WaveFunction, ham: &Hamiltonian, x0: &[f64], t1: f64, dt: f64) -> Result<Trajectory> {
    let out = integrate_many(psi, ham, &[x0.to_vec()], t1, dt, &IntegrationOptions::default())?;
    Ok(out.trajectories.into_iter().next().expect("one start"))
}

/// Draws `n` positions from `|psi|^2`: a cell by inverse CDF over the cell
/// weights, then a uniform offset within the cell.
pub fn sample_initial_positions(psi: &WaveFunction, n: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let grid = psi.grid();
    let rho = psi.density();
    let total: f64 = rho.iter().sum();
    let mut cum = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    for r in &rho {
        acc += r / total;
        cum.push(acc);
    }
    let h = grid.spacing();
    (0..n)
        .map(|_| {
            let u = rng.uniform();
            let cell = cum.partition_point(|&c| c <= u).min(rho.len() - 1);
            let p = grid.point(cell);
            (0..grid.dim())
                .map(|a| grid.axis(a).wrap(p[a] + (rng.uniform() - 0.5) * h[a]).0)
                .collect()
        })
        .collect()
}

/// Trajectories sampled from `|psi0|^2` and integrated together.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub record: EvolutionRecord,
    pub seed: u64,
    pub stream: u64,
    pub dt: f64,
    pub t0: f64,
    pub t1: f64,
}

/// Serialized description of a node abort.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeAbortEntry {
    pub id: usize,
    pub time: f64,
    pub position: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    pub t1: f64,
    pub path_stride: usize,
    pub sampling: String,
    pub node_aborts: Vec<NodeAbortEntry>,
    pub wrapped_trajectories: usize,
}

/// Samples `n` initial positions from `|psi0|^2` and integrates them to `t0 + total`.
pub fn run_ensemble(
    psi0: &WaveFunction,
    ham: &Hamiltonian,
    total: f64,
    dt: f64,
    n: usize,
    rng: &mut SeededRng,
    opts: &IntegrationOptions,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::Precondition("ensemble size must be >= 1".into()));
    }
    let seed = rng.seed();
    let stream = rng.stream();
    let starts = sample_initial_positions(psi0, n, rng);
    let t0 = psi0.time();
    let out = integrate_many(psi0, ham, &starts, t0 + total, dt, opts)?;
    Ok(Ensemble {
        trajectories: out.trajectories,
        record: out.record,
        seed,
        stream,
        dt,
        t0,
        t1: t0 + total,
    })
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn node_aborts(&self) -> Vec<NodeAbortEntry> {
        self.trajectories
            .iter()
            .enumerate()
            .filter_map(|(id, t)| match &t.status {
                TrajectoryStatus::NodeAbort { time, position } => Some(NodeAbortEntry {
                    id,
                    time: *time,
                    position: position.clone(),
                }),
                TrajectoryStatus::Complete => None,
            })
            .collect()
    }

    pub fn abort_fraction(&self) -> f64 {
        self.node_aborts().len() as f64 / self.len() as f64
    }

    /// Positions of the completed trajectories at stored point `i`.
    pub fn positions_at(&self, i: usize) -> Vec<&[f64]> {
        self.trajectories
            .iter()
            .filter(|t| t.is_complete())
            .map(|t| t.position(i))
            .collect()
    }

    /// Final positions of the completed trajectories.
    pub fn final_positions(&self) -> Vec<&[f64]> {
        self.trajectories
            .iter()
            .filter(|t| t.is_complete())
            .map(|t| t.last())
            .collect()
    }

    pub fn sidecar(&self) -> EnsembleSidecar {
        EnsembleSidecar {
            seed: self.seed,
            stream: self.stream,
            n: self.len(),
            dt: self.dt,
            t0: self.t0,
            t1: self.t1,
            path_stride: self.trajectories.first().map_or(1, |t| t.stride),
            sampling: "inverse CDF over cell weights of |psi0|^2 with uniform in-cell jitter".into(),
            node_aborts: self.node_aborts(),
            wrapped_trajectories: self.trajectories.iter().filter(|t| t.wraps > 0).count(),
        }
    }

    /// Writes rows `id,t,x[,y]` for the selected trajectories, keeping every
    /// `point_stride`-th stored point.
    pub fn write_csv(&self, path: &Path, ids: &[usize], point_stride: usize) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        let dim = self.trajectories.first().map_or(1, |t| t.dim);
        let cols = ["x", "y"];
        writeln!(w, "id,t,{}", cols[..dim].join(","))?;
        for &id in ids {
            let tr = &self.trajectories[id];
            let last = tr.len() - 1;
            for i in (0..tr.len()).filter(|i| i % point_stride.max(1) == 0 || *i == last) {
                let p = tr.position(i);
                let coords: Vec<String> = p.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{},{},{}", id, tr.time(i), coords.join(","))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.sidecar())?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }
}

/// Cell weights of the `axis` marginal of `|psi|^2`, summing to 1.
pub fn marginal(psi: &WaveFunction, axis: usize) -> Vec<f64> {
    let grid = psi.grid();
    let mut m = vec![0.0; grid.axis(axis).points];
    for (f, r) in psi.density().into_iter().enumerate() {
        m[grid.unravel(f)[axis]] += r;
    }
    let total: f64 = m.iter().sum();
    m.iter_mut().for_each(|v| *v /= total);
    m
}

/// Piecewise-linear CDF of one marginal of `|psi|^2`; cell `i` spreads its
/// weight uniformly over `[c_i - h/2, c_i + h/2)`.
#[derive(Clone, Debug)]
pub struct MarginalCdf {
    lo: f64,
    spacing: f64,
    weights: Vec<f64>,
    cum: Vec<f64>,
}

impl MarginalCdf {
    pub fn new(psi: &WaveFunction, axis: usize) -> Self {
        let weights = marginal(psi, axis);
        let ax = psi.grid().axis(axis);
        let mut cum = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for w in &weights {
            acc += w;
            cum.push(acc);
        }
        Self {
            lo: ax.lo,
            spacing: ax.spacing(),
            weights,
            cum,
        }
    }

    fn at_cell_coord(&self, u: f64) -> f64 {
        let i = (u.floor().max(0.0) as usize).min(self.weights.len() - 1);
        self.cum[i] + self.weights[i] * (u - i as f64).clamp(0.0, 1.0)
    }

    /// CDF at `x`, reading positions periodically.
    pub fn periodic(&self, x: f64) -> f64 {
        let n = self.weights.len() as f64;
        self.at_cell_coord(((x - self.lo) / self.spacing + 0.5).rem_euclid(n))
    }

    /// Probability of `[a, b)` for `a <= b` within one period.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        let n = self.weights.len() as f64;
        let u = |x: f64| ((x - self.lo) / self.spacing + 0.5).clamp(0.0, n);
        self.at_cell_coord(u(b)) - self.at_cell_coord(u(a))
    }
}

/// Kolmogorov-Smirnov distance between samples along `axis` and the
/// corresponding marginal of `|psi|^2`.
pub fn ks_distance(samples: &[f64], psi: &WaveFunction, axis: usize) -> f64 {
    let cdf = MarginalCdf::new(psi, axis);
    let mut f: Vec<f64> = samples.iter().map(|&x| cdf.periodic(x)).collect();
    f.sort_by(f64::total_cmp);
    let m = f.len() as f64;
    f.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / m).max((i + 1) as f64 / m - v))
        .fold(0.0, f64::max)
}

/// Number of adjacent pairs (ordered by initial position) whose order differs
/// at some stored time. Zero for exact first-order dynamics in 1D.
pub fn ordering_violations(trajectories: &[Trajectory]) -> usize {
    let mut idx: Vec<usize> = (0..trajectories.len())
        .filter(|&i| trajectories[i].is_complete() && trajectories[i].dim == 1)
        .collect();
    idx.sort_by(|&a, &b| trajectories[a].initial()[0].total_cmp(&trajectories[b].initial()[0]));
    let len = idx.first().map_or(0, |&i| trajectories[i].len());
    idx.windows(2)
        .filter(|w| {
            let (a, b) = (&trajectories[w[0]], &trajectories[w[1]]);
            (0..len).any(|i| a.position(i)[0] > b.position(i)[0])
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{gaussian_packet, Packet};
    use num_complex::Complex64;

    #[test]
    fn plane_wave_velocity_is_p_over_m() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        let k = 2.0 * std::f64::consts::PI * 4.0 / 20.0;
        let psi = WaveFunction::plane_wave(&g, &[k]).unwrap();
        for x in [-9.3, -1.0, 0.0, 0.04, 5.5] {
            let v = velocity(&psi, 1.0, &[x]).unwrap();
            assert!((v[0] - 1.2566).abs() < 1e-4);
            assert!((v[0] - k).abs() < 1e-6);
        }
    }

    #[test]
    fn node_is_reported() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        // odd state with an exact node at a grid point
        let psi = WaveFunction::from_fn(&g, |p| Complex64::new(p[0] * (-p[0] * p[0] / 4.0).exp(), 0.0))
            .normalize()
            .unwrap();
        assert!(matches!(velocity(&psi, 1.0, &[0.0]), Err(Error::Node { .. })));
        assert!(velocity(&psi, 1.0, &[1.0]).is_ok());
    }

    #[test]
    fn single_cell_sampling_stays_in_cell() {
        let g = Grid::line(-10.0, 10.0, 64).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 64];
        amps[40] = Complex64::new(1.0, 0.0);
        let psi = WaveFunction::from_amplitudes(g.clone(), amps, 0.0).unwrap().normalize().unwrap();
        let c = g.point(40)[0];
        let h = g.spacing()[0];
        let mut rng = SeededRng::new(11);
        for x in sample_initial_positions(&psi, 500, &mut rng) {
            assert!(x[0] >= c - h / 2.0 && x[0] < c + h / 2.0);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
        let a = sample_initial_positions(&psi, 100, &mut SeededRng::new(5));
        let b = sample_initial_positions(&psi, 100, &mut SeededRng::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn symmetry_axis_trajectory_stays_put() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
        let tr = integrate_trajectory(&psi, &Hamiltonian::free(&g), &[0.0], 2.0, 0.01).unwrap();
        for s in tr.states() {
            assert!(s.position[0].abs() < 1e-10);
        }
        assert!((tr.time(tr.len() - 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn backward_integration_runs_in_negative_time() {
        let g = Grid::line(-10.0, 10.0, 128).unwrap();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 1.0)).unwrap().with_time(1.0);
        let tr = integrate_trajectory(&psi, &Hamiltonian::free(&g), &[0.5], 0.0, 0.01).unwrap();
        assert!(tr.dt() < 0.0);
        assert!((tr.time(tr.len() - 1)).abs() < 1e-12);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let g = Grid::line(-10.0, 10.0, 256).unwrap();
        let psi = gaussian_packet(&g, &Packet::new_1d(0.0, 1.0, 0.0)).unwrap();
        let samples: Vec<f64> = sample_initial_positions(&psi, 20000, &mut SeededRng::new(1))
            .into_iter()
            .map(|v| v[0])
            .collect();
        let d = ks_distance(&samples, &psi, 0);
        assert!(d < 0.015, "{d}");
        let shifted: Vec<f64> = samples.iter().map(|x| x + 1.0).collect();
        assert!(ks_distance(&shifted, &psi, 0) > 0.3);
    }
}
