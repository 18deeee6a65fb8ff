//! The acceptance suite: ten criteria, each evaluated at its stated tolerance.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bohm::velocity;
use crate::error::{Error, Result};
use crate::flux::continuity_residual;
use crate::grid::Grid;
use crate::histories::{
    chain_operator, coarse_grained_chain, decoherence_functional, heisenberg_projector, history_probability,
    interference_term, is_decoherent, additivity_defect, two_slit_toy, CMatrix, CVector, FiniteProjector, Hermitian,
    History, ProjectorFamily,
};
use crate::potential::{Potential, PotentialKind};
use crate::propagate::{advance, evolve, reverse_evolve, Hamiltonian, Propagator};
use crate::rng::{SeededRng, DEFAULT_SEED};
use crate::scenarios::{self, ScenarioReport};
use crate::wave::{gaussian_packet, Packet, WaveFunction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

fn result(id: u32, title: &str, outcome: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        title: title.into(),
        passed,
        detail,
    }
}

/// Scenario reports shared by several criteria, computed on first use.
pub struct Context {
    seed: u64,
    reports: BTreeMap<String, std::result::Result<ScenarioReport, String>>,
}

impl Context {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            reports: BTreeMap::new(),
        }
    }

    pub fn report(&mut self, name: &str) -> Result<&ScenarioReport> {
        if !self.reports.contains_key(name) {
            let r = scenarios::default_spec(name, self.seed)
                .and_then(|spec| scenarios::run(&spec, None))
                .map_err(|e| e.to_string());
            self.reports.insert(name.to_string(), r);
        }
        self.reports[name]
            .as_ref()
            .map_err(|e| Error::Scenario(format!("{name}: {e}")))
    }
}

fn check_passed(r: &ScenarioReport, name: &str) -> Result<(bool, f64)> {
    let c = r
        .check_named(name)
        .ok_or_else(|| Error::Scenario(format!("{} has no check '{name}'", r.scenario)))?;
    Ok((c.passed, c.value))
}

pub const TITLES: [&str; 10] = [
    "unitarity and reversibility",
    "free-particle guidance limit",
    "continuity equation convergence",
    "equivariance in the two-slit ensemble",
    "retrodiction contrast",
    "uncertainty floor",
    "histories algebra",
    "two-path interference in histories",
    "cat ambiguity",
    "reproducibility",
];

/// Evaluates one criterion (1-based).
pub fn criterion(id: u32, ctx: &mut Context) -> CriterionResult {
    let title = TITLES.get(id as usize - 1).copied().unwrap_or("unknown");
    let outcome = match id {
        1 => unitarity(),
        2 => guidance_limit(ctx.seed),
        3 => continuity(),
        4 => equivariance(ctx),
        5 => retrodiction(ctx),
        6 => uncertainty(ctx),
        7 => histories_algebra(ctx.seed),
        8 => two_path_toy(),
        9 => cat(ctx),
        10 => reproducibility(ctx.seed),
        _ => Err(Error::Precondition(format!("no criterion {id}"))),
    };
    result(id, title, outcome)
}

pub fn run_all(seed: u64) -> VerifySummary {
    let mut ctx = Context::new(seed);
    let criteria: Vec<CriterionResult> = (1..=10).map(|id| criterion(id, &mut ctx)).collect();
    let passed = criteria.iter().all(|c| c.passed);
    VerifySummary { seed, criteria, passed }
}

pub fn run_default() -> VerifySummary {
    run_all(DEFAULT_SEED)
}

fn unitarity() -> Result<(bool, String)> {
    let grid = Grid::line(-10.0, 10.0, 256)?;
    let pot = Potential::realize(PotentialKind::Harmonic { omega: 1.0, center: vec![0.0] }, &grid)?;
    let ham = Hamiltonian::new(pot, 1.0)?;
    let psi0 = gaussian_packet(&grid, &Packet::new_1d(-1.0, 0.8, 1.5))?;
    let dt = 1e-3;
    let steps = 10_000;
    let mut psi = psi0.clone();
    advance(&mut psi, &Propagator::new(&ham, dt)?, steps)?;
    let norm_err = (psi.norm() - 1.0).abs();
    let back = reverse_evolve(&psi, &ham, steps as f64 * dt, dt)?;
    let fid = psi0.fidelity(&back)?;
    Ok((
        norm_err < 1e-10 && fid >= 1.0 - 1e-10,
        format!(
            "| ||psi|| - 1 | = {norm_err:.2e} after {steps} steps, |1 - round-trip fidelity| = {:.2e}",
            (1.0 - fid).abs()
        ),
    ))
}

fn guidance_limit(seed: u64) -> Result<(bool, String)> {
    let grid = Grid::line(-10.0, 10.0, 256)?;
    let k = 2.0 * PI * 4.0 / grid.axis(0).length();
    let psi = WaveFunction::plane_wave(&grid, &[k])?;
    let mut rng = SeededRng::substream(seed, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = -10.0 + 20.0 * rng.uniform();
        worst = worst.max((velocity(&psi, 1.0, &[x])?[0] - k).abs());
    }
    Ok((worst < 1e-6, format!("max |v - p/m| = {worst:.2e} over 100 points (p = {k:.4})")))
}

fn moving_gaussian_residual(points: usize, dt: f64) -> Result<f64> {
    let grid = Grid::line(-10.0, 10.0, points)?;
    let psi0 = gaussian_packet(&grid, &Packet::new_1d(-2.0, 1.0, 2.0))?;
    let rec = evolve(&psi0, &Hamiltonian::free(&grid), 20.0 * dt, dt, 1)?;
    continuity_residual(&rec)
}

fn continuity() -> Result<(bool, String)> {
    let coarse = moving_gaussian_residual(256, 1e-3)?;
    let fine = moving_gaussian_residual(512, 5e-4)?;
    let ratio = coarse / fine;
    Ok((
        ratio >= 3.0,
        format!("residual {coarse:.3e} -> {fine:.3e} (ratio {ratio:.2}) when dt halves and points double"),
    ))
}

fn equivariance(ctx: &mut Context) -> Result<(bool, String)> {
    let r = ctx.report("two_slit")?;
    let (ks_ok, ks) = check_passed(r, "screen.ks")?;
    let (min_ok, minima) = check_passed(r, "screen.minima")?;
    let (cross_ok, crossings) = check_passed(r, "paths.axis_crossings")?;
    let contrast = r.results.get("screen.weakest_contrast").copied().unwrap_or(0.0);
    Ok((
        ks_ok && min_ok && cross_ok && contrast >= 5.0,
        format!("KS {ks:.4}, {minima} minima (weakest contrast {contrast:.1}x), {crossings} axis crossings"),
    ))
}

fn retrodiction(ctx: &mut Context) -> Result<(bool, String)> {
    let r = ctx.report("s_wave_detection")?;
    let (b_ok, err) = check_passed(r, "bohm.max_backtrack_error")?;
    let (g_ok, gap) = check_passed(r, "fapp.fidelity_identity_gap")?;
    let (f_ok, fid) = check_passed(r, "fapp.fidelity_bound")?;
    Ok((
        b_ok && g_ok && f_ok && err < 1e-6,
        format!("Bohmian round-trip error {err:.2e}; FAPP fidelity {fid:.5} (gap to ||P psi(T)|| {gap:.1e})"),
    ))
}

fn uncertainty(ctx: &mut Context) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut all = true;
    let mut count = 0;
    for name in ["two_slit", "s_wave_detection", "heisenberg_past", "etp_timing"] {
        let r = ctx.report(name)?;
        for c in r.checks.iter().filter(|c| c.name.starts_with("uncertainty.")) {
            all &= c.passed;
            worst = worst.min(c.value);
            count += 1;
        }
    }
    let r = ctx.report("heisenberg_past")?;
    let (p_ok, product) = check_passed(r, "retrodicted_product")?;
    let (d_ok, dp) = check_passed(r, "post.dp")?;
    Ok((
        all && count > 0 && p_ok && d_ok,
        format!("smallest std_x std_p {worst:.6} over {count} states; retrodicted product {product:.5}; post-collapse dp {dp:.3}"),
    ))
}

/// Random Hermitian matrix with entries uniform in `[-1, 1]`.
fn random_hermitian(n: usize, rng: &mut SeededRng) -> Result<Hermitian> {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(2.0 * rng.uniform() - 1.0, 0.0);
        for j in (i + 1)..n {
            let z = Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Hermitian::new(m)
}

fn random_unitary(n: usize, rng: &mut SeededRng) -> Result<CMatrix> {
    let h = random_hermitian(n, rng)?;
    Ok(SymmetricEigen::new(h.matrix().clone()).eigenvectors)
}

fn random_state(n: usize, rng: &mut SeededRng) -> CVector {
    let v = CVector::from_fn(n, |_, _| Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Complete family from a random orthonormal basis split into `parts` groups.
fn random_family(n: usize, parts: usize, rng: &mut SeededRng) -> Result<ProjectorFamily> {
    let u = random_unitary(n, rng)?;
    let mut members = Vec::new();
    let mut start = 0;
    for p in 0..parts {
        let end = if p + 1 == parts { n } else { start + 1 + (rng.uniform() * (n - start - (parts - p)) as f64) as usize };
        let cols = u.columns(start, end - start);
        members.push(FiniteProjector::new(cols * cols.adjoint(), format!("m{p}"))?);
        start = end;
    }
    ProjectorFamily::new("random", members)
}

/// Worst-case deviations over random instances of the histories identities.
#[derive(Clone, Debug, Default)]
pub struct AlgebraStats {
    pub instances: usize,
    pub idempotence: f64,
    pub diagonal: f64,
    pub single_time_off_diagonal: f64,
    pub coarse_graining: f64,
    pub unitary_invariance: f64,
}

pub fn histories_algebra_stats(seed: u64, instances: usize) -> Result<AlgebraStats> {
    let mut rng = SeededRng::substream(seed, 20);
    let mut s = AlgebraStats {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let n = 2 + (rng.uniform() * 7.0) as usize;
        let h = random_hermitian(n, &mut rng)?;
        let psi = random_state(n, &mut rng);
        let families = vec![
            random_family(n, 2, &mut rng)?,
            random_family(n, 2.min(n), &mut rng)?,
            random_family(n, n.min(3), &mut rng)?,
        ];
        let times = [0.3 + rng.uniform(), 1.5 + rng.uniform(), 3.0 + rng.uniform()];

        for (f, t) in families.iter().zip(times) {
            for p in f.members() {
                let pt = heisenberg_projector(p, &h, t)?;
                let m = pt.matrix();
                s.idempotence = s.idempotence.max(max_abs(&(m * m - m)));
            }
        }

        let schedule: Vec<(f64, usize)> = times.iter().copied().zip(0..3).collect();
        let hist = History::complete_set(&schedule, &families)?;
        let d = decoherence_functional(&hist, &families, &h, &psi)?;
        for (i, x) in hist.iter().enumerate() {
            let p = history_probability(&chain_operator(x, &families, &h)?, &psi);
            s.diagonal = s.diagonal.max((d.matrix[(i, i)].re - p).abs());
        }

        let single = History::complete_set(&[(times[0], 2)], &families)?;
        let d1 = decoherence_functional(&single, &families, &h, &psi)?;
        s.single_time_off_diagonal = s.single_time_off_diagonal.max(d1.max_off_diagonal());

        // coarse-grain the middle slot of histories sharing the other answers
        let fine: Vec<History> = hist
            .iter()
            .filter(|x| x.events()[0].member == 0 && x.events()[2].member == 0)
            .cloned()
            .collect();
        let df = decoherence_functional(&fine, &families, &h, &psi)?;
        let coarse = history_probability(&coarse_grained_chain(&fine, &families, &h)?, &psi);
        let sum: f64 = df.diagonal().iter().sum();
        s.coarse_graining = s.coarse_graining.max((coarse - sum - interference_term(&df)).abs());

        let w = random_unitary(n, &mut rng)?;
        let h2 = Hermitian::new(&w * h.matrix() * w.adjoint())?;
        let psi2 = &w * &psi;
        let fam2: Vec<ProjectorFamily> = families.iter().map(|f| f.conjugate(&w)).collect();
        let d2 = decoherence_functional(&hist, &fam2, &h2, &psi2)?;
        for i in 0..hist.len() {
            for j in 0..hist.len() {
                let dev = (d.matrix[(i, j)].norm() - d2.matrix[(i, j)].norm()).abs();
                s.unitary_invariance = s.unitary_invariance.max(dev);
            }
        }
    }
    Ok(s)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn histories_algebra(seed: u64) -> Result<(bool, String)> {
    let s = histories_algebra_stats(seed, 120)?;
    let ok = s.idempotence < 1e-10
        && s.diagonal < 1e-12
        && s.single_time_off_diagonal < 1e-14
        && s.coarse_graining < 1e-12
        && s.unitary_invariance < 1e-12;
    Ok((
        ok,
        format!(
            "{} instances: |P^2-P| {:.1e}, diag {:.1e}, single-time off-diag {:.1e}, coarse-graining {:.1e}, unitary {:.1e}",
            s.instances, s.idempotence, s.diagonal, s.single_time_off_diagonal, s.coarse_graining, s.unitary_invariance
        ),
    ))
}

fn two_path_toy() -> Result<(bool, String)> {
    let toy = two_slit_toy(0.0, false)?;
    let psi = toy.state.clone().expect("toy state");
    let screen_only = History::from_tuples(&[(2.0, 1, 0)])?;
    let p_d = history_probability(&chain_operator(&screen_only, &toy.families, &toy.hamiltonian)?, &psi);
    let d = decoherence_functional(&toy.histories, &toy.families, &toy.hamiltonian, &psi)?;
    let fine: f64 = d.diagonal().iter().sum();
    let dab = d.matrix[(0, 1)].norm();
    let bare_ok = (p_d - 1.0).abs() < 1e-12 && (fine - 0.5).abs() < 1e-12 && (dab - 0.25).abs() < 1e-12;

    let rec = two_slit_toy(0.0, true)?;
    let psi_r = rec.state.clone().expect("toy state");
    let dr = decoherence_functional(&rec.histories, &rec.families, &rec.hamiltonian, &psi_r)?;
    let (deco, witness) = is_decoherent(&dr, dr.epsilon);
    let defect = additivity_defect(&rec.histories, &rec.families, &rec.hamiltonian, &psi_r)?;
    let rec_ok = deco && witness < 1e-12 && defect < 1e-12;
    Ok((
        bare_ok && rec_ok,
        format!(
            "p(d) = {p_d:.12}, p(A,d)+p(B,d) = {fine:.12}, |D(A,B)| = {dab:.12}; with record: off-diagonal {witness:.1e}, additivity defect {defect:.1e}"
        ),
    ))
}

fn cat(ctx: &mut Context) -> Result<(bool, String)> {
    let r = ctx.report("cat")?;
    let (c_ok, count) = check_passed(r, "candidates_above_half")?;
    let (a_ok, p0) = check_passed(r, "designed.candidate0")?;
    let (b_ok, p1) = check_passed(r, "designed.candidate1")?;
    let (v_ok, _) = check_passed(r, "ambiguous")?;
    Ok((
        c_ok && a_ok && b_ok && v_ok,
        format!("{count} candidates at >= 0.5 (probabilities {p0:.15}, {p1:.15}); past ambiguous: {v_ok}"),
    ))
}

static SCRATCH: AtomicUsize = AtomicUsize::new(0);

fn scratch_dir() -> Result<PathBuf> {
    let k = SCRATCH.fetch_add(1, Ordering::SeqCst);
    let d = std::env::temp_dir().join(format!("qpast-verify-{}-{k}", std::process::id()));
    if d.exists() {
        fs::remove_dir_all(&d)?;
    }
    fs::create_dir_all(&d)?;
    Ok(d)
}

fn data_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
        if matches!(ext, "csv" | "json") {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            out.insert(name, fs::read(&p)?);
        }
    }
    Ok(out)
}

/// Runs `spec` on a pool of `threads` workers into a fresh directory.
fn run_in_pool(spec: &scenarios::ScenarioSpec, threads: usize) -> Result<(ScenarioReport, BTreeMap<String, Vec<u8>>)> {
    let dir = scratch_dir()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Scenario(e.to_string()))?;
    let report = pool.install(|| scenarios::run(spec, Some(&dir)))?;
    let files = data_files(&dir)?;
    fs::remove_dir_all(&dir)?;
    Ok((report, files))
}

/// Byte-identity for repeated runs and scalar agreement across thread counts.
pub fn reproducibility_of(spec: &scenarios::ScenarioSpec) -> Result<(bool, f64, usize)> {
    let (r1, f1) = run_in_pool(spec, 2)?;
    let (_, f2) = run_in_pool(spec, 2)?;
    let identical = f1 == f2 && !f1.is_empty();
    let (r3, _) = run_in_pool(spec, 1)?;
    let (r4, _) = run_in_pool(spec, 4)?;
    let mut worst: f64 = 0.0;
    for r in [&r3, &r4] {
        if r.results.keys().ne(r1.results.keys()) {
            return Ok((false, f64::INFINITY, f1.len()));
        }
        for (k, v) in &r.results {
            worst = worst.max((v - r1.results[k]).abs());
        }
    }
    Ok((identical && worst <= 1e-12, worst, f1.len()))
}

fn reproducibility(seed: u64) -> Result<(bool, String)> {
    let mut two_slit = scenarios::default_spec("two_slit", seed)?;
    two_slit.set("ensemble.n", "2000")?;
    let mut details = Vec::new();
    let mut ok = true;
    for spec in [
        two_slit,
        scenarios::default_spec("s_wave_detection", seed)?,
        scenarios::default_spec("heisenberg_past", seed)?,
        scenarios::default_spec("etp_timing", seed)?,
        scenarios::default_spec("cat", seed)?,
    ] {
        let (pass, worst, files) = reproducibility_of(&spec)?;
        ok &= pass;
        details.push(format!("{} ({files} files, max cross-thread diff {worst:.1e})", spec.name));
    }
    Ok((ok, format!("byte-identical repeats: {}", details.join("; "))))
}
