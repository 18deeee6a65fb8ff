//! A spherically spreading wave caught by one of eight angular detectors.

use std::f64::consts::PI;

use super::{csv, json, node_abort_guard, uncertainty_checks, Bound, ParamDecl, ScenarioInfo, ScenarioReport, ScenarioSpec, Sink};
use crate::bohm::{integrate_many, sample_initial_positions, IntegrationOptions};
use crate::error::Result;
use crate::grid::Grid;
use crate::measure::{born_probabilities, reconstruction_fidelity, sample_outcome, Partition};
use crate::potential::Potential;
use crate::propagate::{advance, step_count, Hamiltonian, Propagator};
use crate::rng::SeededRng;
use crate::snapshot::write_snapshot;
use crate::wave::{gaussian_packet, Packet};

pub(super) fn info() -> ScenarioInfo {
    ScenarioInfo {
        name: "s_wave_detection",
        summary: "radially symmetric packet detected in one of eight sectors; FAPP reconstruction versus Bohmian backtracking",
        theme: "a detector click erases the symmetric wave; only the Bohmian path can be run back",
        params: vec![
            ParamDecl::int("grid.points", 256, "points per axis"),
            ParamDecl::real("grid.half_width", 10.0, "extent is shifted by h/2 so the lattice is symmetric about 0"),
            ParamDecl::real("packet.sigma", 1.0, "initial width"),
            ParamDecl::real("mass", 1.0, "particle mass"),
            ParamDecl::real("time.total", 1.0, "detection time"),
            ParamDecl::real("time.dt", 0.01, "step"),
            ParamDecl::int("sectors", 8, "number of angular detectors"),
            ParamDecl::real("sector.offset", PI / 8.0, "angle of the first sector boundary"),
            ParamDecl::int("bohm.n", 64, "launch points for the backtracking test"),
        ],
        checks: vec![
            ("sector.max_deviation", "<= 1e-3 from 1/sectors"),
            ("fapp.fidelity", "= sqrt(1/sectors) +/- 1e-3"),
            ("fapp.fidelity_identity_gap", "<= 1e-8 (fidelity equals ||P psi(T)||)"),
            ("fapp.fidelity_bound", "< 0.36"),
            ("bohm.max_backtrack_error", "< 1e-6"),
            ("uncertainty.*", ">= 0.5 (1 - 1e-3) per axis"),
        ],
    }
}

pub(super) fn run(spec: &ScenarioSpec, sink: &Sink, report: &mut ScenarioReport) -> Result<()> {
    let points = spec.count("grid.points", 16)?;
    let l = spec.real("grid.half_width")?;
    let h = 2.0 * l / points as f64;
    let grid = Grid::new(&[(-l + h / 2.0, l + h / 2.0); 2], &[points, points])?;
    let sigma = spec.real("packet.sigma")?;
    let psi0 = gaussian_packet(&grid, &Packet::new_2d([0.0, 0.0], [sigma, sigma], [0.0, 0.0]))?;
    let ham = Hamiltonian::new(Potential::free(&grid), spec.real("mass")?)?;
    let total = spec.real("time.total")?;
    let dt = spec.real("time.dt")?;
    let mut psi_t = psi0.clone();
    advance(&mut psi_t, &Propagator::new(&ham, dt)?, step_count(total, dt)?)?;

    let sectors = spec.count("sectors", 2)?;
    let partition = Partition::sectors(&grid, [0.0, 0.0], sectors, spec.real("sector.offset")?)?;
    let weights = born_probabilities(&psi_t, &partition)?;
    let expected = 1.0 / sectors as f64;
    let dev = weights.iter().map(|w| (w - expected).abs()).fold(0.0, f64::max);
    report.check("sector.max_deviation", dev, Bound::AtMost { limit: 1e-3 });
    for (k, w) in weights.iter().enumerate() {
        report.result(&format!("sector.weight.{k}"), *w);
    }

    let mut rng = SeededRng::substream(spec.seed, 0);
    let outcome = sample_outcome(&psi_t, &partition, &mut rng)?;
    let projector = &partition.projectors()[outcome.index];
    report.result("fapp.outcome", outcome.index as f64);
    let fidelity = reconstruction_fidelity(&psi0, &ham, total, projector, dt)?;
    let branch_norm = projector.weight(&psi_t)?.sqrt();
    report.check("fapp.fidelity", fidelity, Bound::Near { target: expected.sqrt(), tolerance: 1e-3 });
    report.check("fapp.fidelity_identity_gap", (fidelity - branch_norm).abs(), Bound::AtMost { limit: 1e-8 });
    report.check("fapp.fidelity_bound", fidelity, Bound::Below { limit: 0.36 });

    let n = spec.count("bohm.n", 1)?;
    let mut launch_rng = SeededRng::substream(spec.seed, 1);
    let starts = sample_initial_positions(&psi0, n, &mut launch_rng);
    let opts = IntegrationOptions::default();
    let fwd = integrate_many(&psi0, &ham, &starts, total, dt, &opts)?;
    let ends: Vec<Vec<f64>> = fwd.trajectories.iter().map(|t| t.last().to_vec()).collect();
    let back = integrate_many(fwd.final_state(), &ham, &ends, psi0.time(), dt, &opts)?;
    let aborted = fwd
        .trajectories
        .iter()
        .zip(&back.trajectories)
        .filter(|(f, b)| !f.is_complete() || !b.is_complete())
        .count();
    node_abort_guard(report, "bohm.node_abort_fraction", aborted, n)?;
    let errors: Vec<f64> = starts
        .iter()
        .zip(&back.trajectories)
        .map(|(s, b)| s.iter().zip(b.last()).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt())
        .collect();
    let max_err = errors.iter().copied().fold(0.0, f64::max);
    report.check("bohm.max_backtrack_error", max_err, Bound::Below { limit: 1e-6 });

    uncertainty_checks(report, "initial", &psi0);
    uncertainty_checks(report, "detection", &psi_t);
    uncertainty_checks(report, "collapsed", &outcome.post_state);
    report.note("the lattice is offset by half a cell so that it is symmetric under quarter turns about the origin");
    report.note("FAPP: collapse onto the sampled sector, then unitary reverse evolution to t = 0");
    report.note("Bohm: launch points sampled from |psi0|^2, integrated forward to the detection time and back");

    let labels: Vec<String> = partition.projectors().iter().map(|p| p.label().to_string()).collect();
    sink.text(report, "sector_weights.csv", "csv", "Born weight per sector", || {
        csv("sector,weight", weights.iter().enumerate().map(|(k, w)| vec![k as f64, *w]))
    })?;
    let record = json(&outcome.record(sink.path("post_state.bin").map(|_| "post_state.bin".to_string())))?;
    sink.text(report, "outcome.json", "json", &format!("sampled detector ({})", labels[outcome.index]), || record)?;
    sink.with_path(report, "post_state.bin", "bin", "collapsed state (snapshot format)", |p| {
        write_snapshot(p, &outcome.post_state)
    })?;
    sink.text(report, "backtrack.csv", "csv", "launch, detection and backtracked positions", || {
        csv(
            "id,x0,y0,xT,yT,x_back,y_back,error",
            (0..n).map(|i| {
                let b = back.trajectories[i].last();
                vec![i as f64, starts[i][0], starts[i][1], ends[i][0], ends[i][1], b[0], b[1], errors[i]]
            }),
        )
    })?;
    Ok(())
}
