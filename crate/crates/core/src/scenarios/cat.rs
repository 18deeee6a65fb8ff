//! Retrodicting a cat: several initial states explain the same final record.

use super::{csv, json, Bound, ParamDecl, ParamValue, ScenarioInfo, ScenarioReport, ScenarioSpec, Sink};
use crate::error::Result;
use crate::histories::{
    cat_model, decoherence_functional, frozen_cat, is_decoherent, two_slit_toy, ModelSpec, RetrodictionReport,
    DEFAULT_AMBIGUITY_THRESHOLD,
};
use crate::scenarios::svg;

pub(super) fn info() -> ScenarioInfo {
    ScenarioInfo {
        name: "cat",
        summary: "cat-and-trigger model where distinct initial states both end with the cat alive",
        theme: "in the histories picture the present record admits more than one past",
        params: vec![
            ParamDecl::real("time.total", 1.0, "time of the final record"),
            ParamDecl::real("threshold", DEFAULT_AMBIGUITY_THRESHOLD, "probability above which a past counts as possible"),
            ParamDecl::real("toy.phase", 0.0, "detector phase of the two-path toy used for the D-matrix table"),
            ParamDecl {
                key: "model",
                default: ParamValue::Text(String::new()),
                doc: "optional JSON model file replacing the built-in cat model",
            },
        ],
        checks: vec![
            ("candidates_above_half", ">= 2"),
            ("designed.candidate0", "= 1 +/- 1e-12"),
            ("designed.candidate1", "= 1 +/- 1e-12"),
            ("ambiguous", "= 1"),
            ("picture_agreement", "<= 1e-12 (Schrodinger vs Heisenberg record probabilities)"),
            ("control.single_ambiguous", "= 0"),
            ("control.frozen.alive", "= 1 +/- 1e-12"),
            ("control.frozen.superposed", "= 0.5 +/- 1e-12"),
            ("control.frozen_ambiguous", "= 1"),
        ],
    }
}

fn table(r: &RetrodictionReport) -> String {
    let header = format!("candidate,{}", r.members.join(","));
    let mut s = header + "\n";
    for c in &r.candidates {
        let cells: Vec<String> = c.conditional.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("\"{}\",{}\n", c.label, cells.join(",")));
    }
    s
}

pub(super) fn run(spec: &ScenarioSpec, sink: &Sink, report: &mut ScenarioReport) -> Result<()> {
    let total = spec.real("time.total")?;
    let threshold = spec.real("threshold")?;
    let model = match &spec.params()["model"] {
        ParamValue::Text(p) if !p.is_empty() => ModelSpec::load(std::path::Path::new(p))?.build()?,
        _ => cat_model(total)?,
    };
    let r = model.retrodict(threshold)?;
    let above_half = r.candidates.iter().filter(|c| c.probability >= 0.5).count();
    report.check("candidates_above_half", above_half as f64, Bound::AtLeast { limit: 2.0 });
    for (i, c) in r.candidates.iter().enumerate().take(2) {
        report.check(&format!("designed.candidate{i}"), c.probability, Bound::Near { target: 1.0, tolerance: 1e-12 });
    }
    report.check("ambiguous", r.ambiguous as u8 as f64, Bound::Near { target: 1.0, tolerance: 0.0 });

    // the same probabilities from explicit Schrodinger evolution
    let obs = model.observation.clone().expect("retrodict checked the observation");
    let p_obs = model.families[obs.family].member(obs.member)?.matrix().clone();
    let u = model.hamiltonian.propagator(obs.time);
    let gap = model
        .candidates
        .iter()
        .zip(&r.candidates)
        .map(|((_, psi), row)| ((&p_obs * (&u * psi)).norm_squared() - row.probability).abs())
        .fold(0.0, f64::max);
    report.check("picture_agreement", gap, Bound::AtMost { limit: 1e-12 });

    let mut single = model.clone();
    single.candidates.truncate(1);
    let rs = single.retrodict(threshold)?;
    report.check("control.single_ambiguous", rs.ambiguous as u8 as f64, Bound::Near { target: 0.0, tolerance: 0.0 });
    let rf = frozen_cat()?.retrodict(threshold)?;
    report.check("control.frozen.alive", rf.candidates[0].probability, Bound::Near { target: 1.0, tolerance: 1e-12 });
    report.check(
        "control.frozen.superposed",
        rf.candidates[1].probability,
        Bound::Near { target: 0.5, tolerance: 1e-12 },
    );
    report.check("control.frozen_ambiguous", rf.ambiguous as u8 as f64, Bound::Near { target: 1.0, tolerance: 0.0 });

    // decoherence tables of the two-path toy, without and with a which-path record
    let phase = spec.real("toy.phase")?;
    let mut tables = Vec::new();
    for which in [false, true] {
        let toy = two_slit_toy(phase, which)?;
        let psi = toy.state.clone().expect("toy has a state");
        let d = decoherence_functional(&toy.histories, &toy.families, &toy.hamiltonian, &psi)?;
        let (ok, witness) = is_decoherent(&d, d.epsilon);
        let key = if which { "toy.record" } else { "toy.bare" };
        report.result(&format!("{key}.max_off_diagonal"), witness);
        report.result(&format!("{key}.decoherent"), ok as u8 as f64);
        tables.push((which, toy.histories.iter().map(|h| h.label.clone()).collect::<Vec<_>>(), d));
    }

    report.note(format!("verdict: {}", r.verdict));
    report.note("the Bohmian scenarios (two_slit, s_wave_detection, etp_timing) instead return one past per trajectory");
    report.note(format!("ambiguity threshold {threshold}; decoherence uses a relative off-diagonal threshold"));

    let model_json = model.to_spec().to_json()? + "\n";
    sink.text(report, "model.json", "json", "finite model (complex entries as [re, im])", || model_json)?;
    let retro = json(&r)?;
    sink.text(report, "retrodiction.json", "json", "candidate pasts and verdict", || retro)?;
    sink.text(report, "conditional_table.csv", "csv", "final-record probabilities per candidate", || table(&r))?;
    sink.text(report, "toy_decoherence.csv", "csv", "two-path toy decoherence matrices", || {
        csv(
            "which_path,row,col,re,im",
            tables.iter().flat_map(|(which, _, d)| {
                let n = d.matrix.nrows();
                (0..n * n).map(move |k| {
                    let z = d.matrix[(k / n, k % n)];
                    vec![*which as u8 as f64, (k / n) as f64, (k % n) as f64, z.re, z.im]
                })
            }),
        )
    })?;
    sink.text(report, "toy_decoherence.svg", "svg", "|D| heat table for the bare two-path toy", || {
        let (_, labels, d) = &tables[0];
        let n = d.matrix.nrows();
        let values: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d.matrix[(i, j)].norm()).collect()).collect();
        svg::heat_table("|D(beta, alpha)|", labels, &values)
    })?;
    Ok(())
}
