//! Two Gaussian beams leaving two slits; Bohmian ensemble versus `|psi|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{csv, node_abort_guard, uncertainty_checks, Bound, ParamDecl, ScenarioInfo, ScenarioReport, ScenarioSpec, Sink};
use crate::bohm::{ks_distance, marginal, run_ensemble, IntegrationOptions, MarginalCdf};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::Potential;
use crate::propagate::Hamiltonian;
use crate::rng::SeededRng;
use crate::scenarios::svg;
use crate::wave::{gaussian_packet, Packet, WaveFunction};

pub(super) fn info() -> ScenarioInfo {
    ScenarioInfo {
        name: "two_slit",
        summary: "Bohmian trajectories behind two slits: each particle passes one slit while the wave passes both",
        theme: "two-slit interference with definite particle paths",
        params: vec![
            ParamDecl::int("grid.points", 256, "points per axis"),
            ParamDecl::real("grid.x_half_width", 24.0, "x extent is [-w, w)"),
            ParamDecl::real("grid.y_half_width", 16.0, "y extent is [-w, w) shifted up by half a cell"),
            ParamDecl::int("slit.count", 2, "1 or 2 beams"),
            ParamDecl::real("slit.y", 1.5, "beams start at y = +/- this"),
            ParamDecl::real("slit.phase", PI, "relative phase of the lower beam"),
            ParamDecl::real("packet.sigma_y", 0.4, "transverse width of each beam"),
            ParamDecl::real("packet.sigma_x", 1.0, "longitudinal width"),
            ParamDecl::real("packet.x0", -12.0, "starting x"),
            ParamDecl::real("packet.p", 8.0, "forward momentum"),
            ParamDecl::real("mass", 1.0, "particle mass"),
            ParamDecl::real("time.total", 3.0, "flight time to the screen"),
            ParamDecl::real("time.dt", 0.01, "step"),
            ParamDecl::int("ensemble.n", 10_000, "number of trajectories"),
            ParamDecl::int("screen.bins", 128, "histogram bins"),
            ParamDecl::real("screen.half_width", 16.0, "histogram covers [-w, w)"),
            ParamDecl::int("output.fan", 200, "trajectories written to the fan CSV"),
            ParamDecl::int("output.point_stride", 5, "keep every k-th point in the fan CSV"),
        ],
        checks: vec![
            ("paths.axis_crossings", "== 0 trajectories change the sign of y (two beams)"),
            ("paths.slit_mismatch", "== 0 final sides differ from initial sides (two beams)"),
            ("screen.ks", "< 0.03"),
            ("screen.minima", ">= 3 (two beams) or == 0 (one beam)"),
            ("uncertainty.*", ">= 0.5 (1 - 1e-3) per axis"),
        ],
    }
}

/// A histogram minimum flanked by significantly higher maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub bin: usize,
    pub left_peak: usize,
    pub right_peak: usize,
    pub contrast: f64,
}

/// Interference minima of a count histogram. From each local minimum `m`,
/// walk outwards while counts stay `>= m` and take the largest count on each
/// side. A minimum qualifies when both sides exceed it by three Poisson
/// standard deviations and the larger side is at least five times `m`.
/// Minima sharing the same pair of flanking peaks are counted once.
pub fn interference_minima(counts: &[u64]) -> Vec<Minimum> {
    let n = counts.len();
    let mut out: Vec<Minimum> = Vec::new();
    for i in 0..n {
        let m = counts[i];
        if (i > 0 && counts[i - 1] < m) || (i + 1 < n && counts[i + 1] < m) {
            continue;
        }
        let side = |range: &mut dyn Iterator<Item = usize>| -> Option<(usize, u64)> {
            let mut best: Option<(usize, u64)> = None;
            for j in range {
                if counts[j] < m {
                    break;
                }
                if best.is_none_or(|(_, b)| counts[j] > b) {
                    best = Some((j, counts[j]));
                }
            }
            best
        };
        let (Some((li, lm)), Some((ri, rm))) = (side(&mut (0..i).rev()), side(&mut (i + 1..n))) else {
            continue;
        };
        let significant = |peak: u64| peak > m && (peak - m) as f64 >= 3.0 * (peak as f64).sqrt();
        let top = lm.max(rm);
        if significant(lm) && significant(rm) && top >= 5 * m {
            if out.iter().any(|x| x.left_peak == li && x.right_peak == ri) {
                continue;
            }
            out.push(Minimum {
                bin: i,
                left_peak: li,
                right_peak: ri,
                contrast: top as f64 / (m as f64).max(1.0),
            });
        }
    }
    out
}

fn initial_state(spec: &ScenarioSpec, grid: &Grid) -> Result<WaveFunction> {
    let slits = spec.count("slit.count", 1)?;
    if slits > 2 {
        return Err(Error::Scenario("slit.count must be 1 or 2".into()));
    }
    let a = spec.real("slit.y")?;
    let x0 = spec.real("packet.x0")?;
    let sx = spec.real("packet.sigma_x")?;
    let sy = spec.real("packet.sigma_y")?;
    let p = spec.real("packet.p")?;
    let upper = gaussian_packet(grid, &Packet::new_2d([x0, a], [sx, sy], [p, 0.0]))?;
    if slits == 1 {
        return Ok(upper);
    }
    let lower = gaussian_packet(grid, &Packet::new_2d([x0, -a], [sx, sy], [p, 0.0]))?;
    let phase = Complex64::from_polar(1.0, spec.real("slit.phase")?);
    WaveFunction::superpose(&[(Complex64::new(1.0, 0.0), &upper), (phase, &lower)])?.normalize()
}

pub(super) fn run(spec: &ScenarioSpec, sink: &Sink, report: &mut ScenarioReport) -> Result<()> {
    let n = spec.count("ensemble.n", 1)?;
    let points = spec.count("grid.points", 16)?;
    let xw = spec.real("grid.x_half_width")?;
    let yw = spec.real("grid.y_half_width")?;
    // half-cell shift in y puts the symmetry axis between grid rows
    let hy = 2.0 * yw / points as f64;
    let grid = Grid::new(&[(-xw, xw), (-yw + hy / 2.0, yw + hy / 2.0)], &[points, points])?;
    let two = spec.count("slit.count", 1)? == 2;
    let psi0 = initial_state(spec, &grid)?;
    let ham = Hamiltonian::new(Potential::free(&grid), spec.real("mass")?)?;
    let total = spec.real("time.total")?;
    let dt = spec.real("time.dt")?;

    let mut rng = SeededRng::substream(spec.seed, 0);
    let ensemble = run_ensemble(&psi0, &ham, total, dt, n, &mut rng, &IntegrationOptions::default())?;
    node_abort_guard(report, "paths.node_abort_fraction", ensemble.node_aborts().len(), n)?;
    let psi_t = ensemble.record.last();

    let done: Vec<_> = ensemble.trajectories.iter().filter(|t| t.is_complete()).collect();
    let crossings = done
        .iter()
        .filter(|t| {
            let s0 = t.initial()[1] >= 0.0;
            (0..t.len()).any(|i| (t.position(i)[1] >= 0.0) != s0)
        })
        .count();
    let mismatch = done
        .iter()
        .filter(|t| (t.initial()[1] >= 0.0) != (t.last()[1] >= 0.0))
        .count();
    if two {
        report.check("paths.axis_crossings", crossings as f64, Bound::AtMost { limit: 0.0 });
        report.check("paths.slit_mismatch", mismatch as f64, Bound::AtMost { limit: 0.0 });
    } else {
        report.result("paths.axis_crossings", crossings as f64);
    }
    report.result("paths.wrapped", ensemble.trajectories.iter().filter(|t| t.wraps > 0).count() as f64);

    let screen: Vec<f64> = done.iter().map(|t| t.last()[1]).collect();
    report.check("screen.ks", ks_distance(&screen, psi_t, 1), Bound::Below { limit: 0.03 });

    let bins = spec.count("screen.bins", 2)?;
    let sw = spec.real("screen.half_width")?;
    let width = 2.0 * sw / bins as f64;
    let mut counts = vec![0u64; bins];
    for &y in &screen {
        let b = ((y + sw) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    let minima = interference_minima(&counts);
    let bound = if two { Bound::AtLeast { limit: 3.0 } } else { Bound::AtMost { limit: 0.0 } };
    report.check("screen.minima", minima.len() as f64, bound);
    if let Some(weakest) = minima.iter().map(|m| m.contrast).reduce(f64::min) {
        report.result("screen.weakest_contrast", weakest);
    }
    report.result("screen.in_range", counts.iter().sum::<u64>() as f64 / screen.len().max(1) as f64);

    uncertainty_checks(report, "initial", &psi0);
    uncertainty_checks(report, "final", psi_t);
    report.note("beams are an initial superposition of two displaced Gaussians; no barrier potential");
    report.note(format!(
        "trajectory RNG: seed {} stream {}, inverse-CDF cell sampling with in-cell jitter",
        ensemble.seed, ensemble.stream
    ));

    // datasets
    let cdf = MarginalCdf::new(psi_t, 1);
    let edges: Vec<f64> = (0..=bins).map(|b| -sw + b as f64 * width).collect();
    let total_n = screen.len() as f64;
    let hist_density: Vec<f64> = counts.iter().map(|&c| c as f64 / total_n / width).collect();
    sink.text(report, "screen_histogram.csv", "csv", "screen counts and Born bin probabilities", || {
        csv(
            "bin_lo,bin_hi,count,density,born_probability",
            (0..bins).map(|b| {
                vec![
                    edges[b],
                    edges[b + 1],
                    counts[b] as f64,
                    hist_density[b],
                    cdf.interval(edges[b], edges[b + 1]),
                ]
            }),
        )
    })?;
    let ys = grid.axis(1).coords();
    let h = grid.axis(1).spacing();
    let marg: Vec<f64> = marginal(psi_t, 1).into_iter().map(|w| w / h).collect();
    sink.text(report, "screen_marginal.csv", "csv", "|psi(T)|^2 marginal along y", || {
        csv("y,density", ys.iter().zip(&marg).map(|(y, d)| vec![*y, *d]))
    })?;
    sink.text(report, "screen.svg", "svg", "screen histogram against |psi|^2", || {
        svg::histogram("screen", "y", &edges, &hist_density, Some((&ys, &marg)))
    })?;
    let fan = spec.count("output.fan", 0)?.min(n);
    let ids: Vec<usize> = (0..fan).map(|i| i * n / fan.max(1)).collect();
    let stride = spec.count("output.point_stride", 1)?;
    sink.with_path(report, "trajectories.csv", "csv", "trajectory fan (id,t,x,y)", |p| {
        ensemble.write_csv(p, &ids, stride)
    })?;
    sink.with_path(report, "trajectories.json", "json", "ensemble sidecar", |p| ensemble.write_sidecar(p))?;
    sink.text(report, "fan.svg", "svg", "trajectory fan", || {
        let lines: Vec<Vec<(f64, f64)>> = ids
            .iter()
            .map(|&i| {
                let t = &ensemble.trajectories[i];
                (0..t.len()).map(|k| (t.position(k)[0], t.position(k)[1])).collect()
            })
            .collect();
        svg::paths("trajectories", "x", [-xw, xw, -yw + hy / 2.0, yw + hy / 2.0], &lines)
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima_rule() {
        let counts = [0, 100, 400, 100, 2, 100, 400, 100, 0];
        let m = interference_minima(&counts);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].bin, 4);
        // shallow dip is not significant
        assert!(interference_minima(&[0, 100, 110, 95, 105, 100, 0]).is_empty());
        // an empty edge bin is not a peak
        assert!(interference_minima(&[0, 50, 300, 50, 2, 0, 0]).is_empty());
    }
}
