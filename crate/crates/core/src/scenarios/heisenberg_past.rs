//! Sharp position measurement on a near-plane-wave packet: the retrodicted
//! past beats the uncertainty product, the future does not.

use super::{csv, json, uncertainty_checks, Bound, ParamDecl, ScenarioInfo, ScenarioReport, ScenarioSpec, Sink};
use crate::error::Result;
use crate::grid::Grid;
use crate::measure::{momentum_amplitudes, momentum_stats, position_stats, sample_outcome, Partition};
use crate::potential::Potential;
use crate::propagate::{advance, step_count, Hamiltonian, Propagator};
use crate::rng::SeededRng;
use crate::scenarios::svg;
use crate::wave::{gaussian_packet, Packet};

pub(super) fn info() -> ScenarioInfo {
    ScenarioInfo {
        name: "heisenberg_past",
        summary: "position measurement in a narrow window after free flight of a nearly monochromatic packet",
        theme: "knowledge about the past can beat the uncertainty product; the measurement destroys momentum knowledge for the future",
        params: vec![
            ParamDecl::int("grid.points", 1024, "points"),
            ParamDecl::real("grid.half_width", 32.0, "extent is [-w, w)"),
            ParamDecl::real("packet.sigma", 5.0, "position width (momentum width 1/(2 sigma))"),
            ParamDecl::real("packet.x0", 0.0, "initial center"),
            ParamDecl::real("packet.p", 1.0, "mean momentum"),
            ParamDecl::real("mass", 1.0, "particle mass"),
            ParamDecl::real("time.total", 3.0, "flight time before the measurement"),
            ParamDecl::real("time.dt", 0.01, "step"),
            ParamDecl::real("window.width", 0.25, "detector window width"),
        ],
        checks: vec![
            ("pre.dp", "= 1/(2 sigma) +/- 1%"),
            ("retrodicted_product", "= w / (2 sigma) +/- 10%"),
            ("retrodicted_product_limit", "< 0.5"),
            ("post.dp", ">= 1/(2w) (1 - 1e-3)"),
            ("uncertainty.*", ">= 0.5 (1 - 1e-3)"),
        ],
    }
}

pub(super) fn run(spec: &ScenarioSpec, sink: &Sink, report: &mut ScenarioReport) -> Result<()> {
    let points = spec.count("grid.points", 16)?;
    let l = spec.real("grid.half_width")?;
    let grid = Grid::line(-l, l, points)?;
    let sigma = spec.real("packet.sigma")?;
    let psi0 = gaussian_packet(&grid, &Packet::new_1d(spec.real("packet.x0")?, sigma, spec.real("packet.p")?))?;
    let ham = Hamiltonian::new(Potential::free(&grid), spec.real("mass")?)?;
    let total = spec.real("time.total")?;
    let dt = spec.real("time.dt")?;
    let mut psi_t = psi0.clone();
    advance(&mut psi_t, &Propagator::new(&ham, dt)?, step_count(total, dt)?)?;

    let w = spec.real("window.width")?;
    let partition = Partition::windows(&grid, 0, w)?;
    let mut rng = SeededRng::substream(spec.seed, 0);
    let outcome = sample_outcome(&psi_t, &partition, &mut rng)?;
    let post = &outcome.post_state;

    let dp_pre = momentum_stats(&psi_t).std[0];
    let dp_post = momentum_stats(post).std[0];
    let dx_post = position_stats(post).std[0];
    let target = 1.0 / (2.0 * sigma);
    report.check("pre.dp", dp_pre, Bound::Relative { target, fraction: 0.01 });
    report.result("pre.dx", position_stats(&psi_t).std[0]);
    let product = w * dp_pre;
    report.check("retrodicted_product", product, Bound::Relative { target: w * target, fraction: 0.1 });
    report.check("retrodicted_product_limit", product, Bound::Below { limit: 0.5 });
    report.check("post.dp", dp_post, Bound::AtLeast { limit: 1.0 / (2.0 * w) * (1.0 - 1e-3) });
    report.result("post.dx", dx_post);
    report.result("post.product", dx_post * dp_post);
    report.result("outcome.index", outcome.index as f64);
    report.result("outcome.probability", outcome.probability);

    uncertainty_checks(report, "initial", &psi0);
    uncertainty_checks(report, "before_measurement", &psi_t);
    uncertainty_checks(report, "after_measurement", post);
    report.note(
        "the retrodicted product (window width times the pre-measurement momentum spread) is speculative: \
         it describes the past and cannot be prepared as an initial condition",
    );
    report.note("after the measurement the momentum spread is at least 1/(2w): the earlier momentum knowledge is lost");

    let outcome_json = json(&outcome.record(None))?;
    sink.text(report, "outcome.json", "json", "sampled window", || outcome_json)?;
    let ks = grid.axis(0).wavenumbers();
    let spectrum = |psi: &crate::wave::WaveFunction| -> Vec<f64> {
        let hat = momentum_amplitudes(psi);
        let total: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        hat.iter().map(|z| z.norm_sqr() / total / grid.axis(0).dk()).collect()
    };
    let (pre_s, post_s) = (spectrum(&psi_t), spectrum(post));
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| ks[a].total_cmp(&ks[b]));
    sink.text(report, "momentum_spectra.csv", "csv", "momentum densities before and after", || {
        csv("k,before,after", order.iter().map(|&i| vec![ks[i], pre_s[i], post_s[i]]))
    })?;
    sink.text(report, "momentum_after.svg", "svg", "momentum density after the measurement", || {
        let k_sorted: Vec<f64> = order.iter().map(|&i| ks[i]).collect();
        let dk = grid.axis(0).dk();
        let edges: Vec<f64> = k_sorted.iter().map(|k| k - dk / 2.0).chain([k_sorted[k_sorted.len() - 1] + dk / 2.0]).collect();
        let dens: Vec<f64> = order.iter().map(|&i| post_s[i]).collect();
        svg::histogram("momentum after measurement", "k", &edges, &dens, None)
    })?;
    Ok(())
}
