//! Entangled momentum pair: a sharp momentum reading on one particle fixes
//! the other's, and rewrites the Bohmian past of the first.

use num_complex::Complex64;
use serde::Serialize;

use super::{csv, json, node_abort_guard, uncertainty_checks, Bound, ParamDecl, ScenarioInfo, ScenarioReport, ScenarioSpec, Sink};
use crate::bohm::{integrate_many, sample_initial_positions, IntegrationOptions};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::{momentum_amplitudes, momentum_covariance, momentum_stats, sample_outcome, Partition};
use crate::potential::Potential;
use crate::propagate::{advance, step_count, Hamiltonian, Propagator};
use crate::rng::SeededRng;
use crate::wave::WaveFunction;

pub(super) fn info() -> ScenarioInfo {
    ScenarioInfo {
        name: "etp_timing",
        summary: "two particles with anticorrelated momenta; measuring one sharpens the other and breaks retrodiction of the first",
        theme: "uncertainty about the past mirrors uncertainty about the future (entangled-Gaussian stand-in for the box, scale and shutter)",
        params: vec![
            ParamDecl::int("grid.points", 256, "points per axis (x1, x2)"),
            ParamDecl::real("grid.half_width", 32.0, "extent is [-w, w) on both axes"),
            ParamDecl::real("state.sigma_plus", 10.0, "width along x1 + x2"),
            ParamDecl::real("state.sigma_minus", 0.4, "width along x1 - x2"),
            ParamDecl::real("state.p", 2.0, "particle 1 moves with +p, particle 2 with -p"),
            ParamDecl::real("mass", 1.0, "mass of each particle"),
            ParamDecl::real("measure.time", 1.0, "time of the momentum measurement"),
            ParamDecl::real("time.dt", 0.01, "step"),
            ParamDecl::real("window.width", 0.25, "momentum window width for particle 1"),
            ParamDecl::int("bohm.n", 16, "trajectories used for the backtracking comparison"),
        ],
        checks: vec![
            ("momentum.correlation", "<= -0.99"),
            ("momentum.total_spread_ratio", "<= 0.1 (spread of p1 + p2 relative to spread of p1)"),
            ("conditional.narrowing", ">= 5 (spread of p2 before / after measuring p1)"),
            ("bohm.post_over_pre", "> 10 (median post-collapse backtrack error / largest pre-collapse error)"),
            ("control.correlation_magnitude", "<= 0.01"),
            ("control.dp2_change", "<= 0.05"),
            ("uncertainty.*", ">= 0.5 (1 - 1e-3) per axis"),
        ],
    }
}

#[derive(Serialize)]
struct MomentumSummary {
    mean: Vec<f64>,
    covariance: Vec<f64>,
    correlation: f64,
}

fn summary(psi: &WaveFunction) -> MomentumSummary {
    let (mean, cov) = momentum_covariance(psi);
    let correlation = cov[1] / (cov[0] * cov[3]).sqrt();
    MomentumSummary { mean, covariance: cov, correlation }
}

/// Marginal density of `k2` (FFT order).
fn k2_marginal(psi: &WaveFunction) -> Vec<f64> {
    let grid = psi.grid();
    let ny = grid.axis(1).points;
    let hat = momentum_amplitudes(psi);
    let mut m = vec![0.0; ny];
    for (f, z) in hat.iter().enumerate() {
        m[f % ny] += z.norm_sqr();
    }
    let total: f64 = m.iter().sum();
    m.iter().map(|v| v / total / grid.axis(1).dk()).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(super) fn run(spec: &ScenarioSpec, sink: &Sink, report: &mut ScenarioReport) -> Result<()> {
    let points = spec.count("grid.points", 16)?;
    let l = spec.real("grid.half_width")?;
    let grid = Grid::square(-l, l, points)?;
    let sp = spec.real("state.sigma_plus")?;
    let sm = spec.real("state.sigma_minus")?;
    let p = spec.real("state.p")?;
    if !(sp > 0.0 && sm > 0.0) {
        return Err(Error::Scenario("state widths must be positive".into()));
    }
    let psi0 = WaveFunction::from_fn(&grid, |x| {
        let (u, v) = (x[0] + x[1], x[0] - x[1]);
        Complex64::from_polar((-u * u / (4.0 * sp * sp) - v * v / (4.0 * sm * sm)).exp(), p * v)
    })
    .normalize()?;
    // product state with the same single-particle position widths
    let sc = 0.5 * (sp * sp + sm * sm).sqrt();
    let control = WaveFunction::from_fn(&grid, |x| {
        Complex64::from_polar((-(x[0] * x[0] + x[1] * x[1]) / (4.0 * sc * sc)).exp(), p * (x[0] - x[1]))
    })
    .normalize()?;

    let ham = Hamiltonian::new(Potential::free(&grid), spec.real("mass")?)?;
    let tm = spec.real("measure.time")?;
    let dt = spec.real("time.dt")?;

    let s0 = summary(&psi0);
    report.check("momentum.correlation", s0.correlation, Bound::AtMost { limit: -0.99 });
    let c = &s0.covariance;
    let dp1 = c[0].sqrt();
    let total_spread = (c[0] + c[3] + 2.0 * c[1]).max(0.0).sqrt();
    report.result("momentum.dp1", dp1);
    report.result("momentum.total_spread", total_spread);
    report.check("momentum.total_spread_ratio", total_spread / dp1, Bound::AtMost { limit: 0.1 });

    // Bohmian launch and forward run; the co-stepped state at the measurement
    // time is the one that gets measured
    let n = spec.count("bohm.n", 1)?;
    let starts = sample_initial_positions(&psi0, n, &mut SeededRng::substream(spec.seed, 1));
    let opts = IntegrationOptions::default();
    let fwd = integrate_many(&psi0, &ham, &starts, tm, dt, &opts)?;
    let psi_m = fwd.final_state().clone();

    let partition = Partition::momentum_windows(&grid, 0, spec.real("window.width")?)?;
    let outcome = sample_outcome(&psi_m, &partition, &mut SeededRng::substream(spec.seed, 0))?;
    let collapsed = &outcome.post_state;
    let dp2_before = momentum_stats(&psi_m).std[1];
    let dp2_after = momentum_stats(collapsed).std[1];
    report.result("conditional.dp2_before", dp2_before);
    report.result("conditional.dp2_after", dp2_after);
    report.check("conditional.narrowing", dp2_before / dp2_after, Bound::AtLeast { limit: 5.0 });
    report.result("outcome.index", outcome.index as f64);
    report.result("outcome.probability", outcome.probability);

    let ends: Vec<Vec<f64>> = fwd.trajectories.iter().map(|t| t.last().to_vec()).collect();
    let back_pre = integrate_many(&psi_m, &ham, &ends, psi0.time(), dt, &opts)?;
    let back_post = integrate_many(collapsed, &ham, &ends, psi0.time(), dt, &opts)?;
    let pre_aborts = fwd
        .trajectories
        .iter()
        .zip(&back_pre.trajectories)
        .filter(|(f, b)| !f.is_complete() || !b.is_complete())
        .count();
    node_abort_guard(report, "bohm.node_abort_fraction", pre_aborts, n)?;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let e_pre: Vec<f64> = (0..n).map(|i| dist(&starts[i], back_pre.trajectories[i].last())).collect();
    // a node hit on the way back means the collapsed state offers no past at all
    let post_aborts = back_post.trajectories.iter().filter(|t| !t.is_complete()).count();
    let e_post: Vec<f64> = (0..n)
        .filter(|&i| back_post.trajectories[i].is_complete())
        .map(|i| dist(&starts[i], back_post.trajectories[i].last()))
        .collect();
    let pre_max = e_pre.iter().copied().fold(0.0, f64::max);
    report.result("bohm.pre_backtrack_max_error", pre_max);
    report.result("bohm.post_backtrack_aborts", post_aborts as f64);
    let post_med = if e_post.is_empty() { f64::MAX } else { median(e_post.clone()) };
    report.result("bohm.post_backtrack_median_error", post_med);
    report.check("bohm.post_over_pre", post_med / pre_max.max(f64::MIN_POSITIVE), Bound::Above { limit: 10.0 });

    // product-state control
    let mut control_m = control.clone();
    advance(&mut control_m, &Propagator::new(&ham, dt)?, step_count(tm, dt)?)?;
    report.check(
        "control.correlation_magnitude",
        summary(&control).correlation.abs(),
        Bound::AtMost { limit: 0.01 },
    );
    let c_out = sample_outcome(&control_m, &partition, &mut SeededRng::substream(spec.seed, 2))?;
    let c_before = momentum_stats(&control_m).std[1];
    let c_after = momentum_stats(&c_out.post_state).std[1];
    report.check("control.dp2_change", (c_after / c_before - 1.0).abs(), Bound::AtMost { limit: 0.05 });

    uncertainty_checks(report, "initial", &psi0);
    uncertainty_checks(report, "before_measurement", &psi_m);
    uncertainty_checks(report, "after_measurement", collapsed);
    uncertainty_checks(report, "control", &control);
    report.note(
        "the weighed box, clock and shutter are replaced by a nonrelativistic entangled Gaussian pair whose \
         momenta are anticorrelated; this substitution is a modeling choice",
    );
    report.note("backtracking after the measurement uses the collapsed state from the measurement time");

    let mom = json(&serde_json::json!({ "initial": s0, "at_measurement": summary(&psi_m) }))?;
    sink.text(report, "momentum.json", "json", "momentum means, covariances and correlations", || mom)?;
    let outcome_json = json(&outcome.record(None))?;
    sink.text(report, "outcome.json", "json", "sampled momentum window for particle 1", || outcome_json)?;
    sink.text(report, "backtrack.csv", "csv", "launch points and backtracked positions", || {
        csv(
            "id,x1_0,x2_0,x1_m,x2_m,x1_back_pre,x2_back_pre,x1_back_post,x2_back_post,post_complete",
            (0..n).map(|i| {
                let a = back_pre.trajectories[i].last();
                let b = back_post.trajectories[i].last();
                let ok = back_post.trajectories[i].is_complete();
                vec![
                    i as f64, starts[i][0], starts[i][1], ends[i][0], ends[i][1], a[0], a[1], b[0], b[1],
                    ok as u8 as f64,
                ]
            }),
        )
    })?;
    let ks = grid.axis(1).wavenumbers();
    let (before, after) = (k2_marginal(&psi_m), k2_marginal(collapsed));
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| ks[a].total_cmp(&ks[b]));
    sink.text(report, "p2_spectra.csv", "csv", "particle-2 momentum density before and after", || {
        csv("k2,before,after", order.iter().map(|&i| vec![ks[i], before[i], after[i]]))
    })?;
    Ok(())
}
