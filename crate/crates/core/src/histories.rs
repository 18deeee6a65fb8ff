//! Finite-dimensional decoherent histories: Heisenberg-picture projectors,
//! chain operators, history probabilities and the decoherence functional.
//!
//! Conventions: Schrodinger states evolve as `e^{-iHt}`, Heisenberg
//! projectors as `P(t) = e^{iHt} P e^{-iHt}`, and a chain operator is the
//! product `P_k(t_k) ... P_1(t_1)` with the latest time leftmost.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const MAX_DIM: usize = 64;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PROJECTOR_TOL: f64 = 1e-12;
/// Tolerance on Heisenberg-evolved projectors, which carry eigensolver roundoff.
pub const EVOLVED_PROJECTOR_TOL: f64 = 1e-10;
/// Default relative threshold for declaring a history set decoherent.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Default probability above which a candidate past counts as possible.
pub const DEFAULT_AMBIGUITY_THRESHOLD: f64 = 0.05;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_dim(n: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidOperator(format!("dimension {n} outside 2..={MAX_DIM}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl FiniteSpace {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        check_dim(labels.len())?;
        Ok(Self {
            dim: labels.len(),
            labels: Some(labels),
        })
    }

    /// Basis vector `|i>`.
    pub fn basis(&self, i: usize) -> CVector {
        let mut v = CVector::zeros(self.dim);
        v[i] = ONE;
        v
    }
}

/// Hermitian matrix with a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct Hermitian {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Hermitian {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidOperator("matrix is not square".into()));
        }
        check_dim(matrix.nrows())?;
        let dev = max_abs(&(&matrix - matrix.adjoint()));
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidOperator(format!("not Hermitian: |H - H^dag| = {dev:e}")));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            matrix,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(i s H)`.
    pub fn exp_i(&self, s: f64) -> CMatrix {
        let phases = CVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, s * l)),
        );
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * v.adjoint()
    }

    /// Schrodinger propagator `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.exp_i(-t)
    }
}

#[derive(Clone, Debug)]
pub struct FiniteProjector {
    matrix: CMatrix,
    pub label: String,
}

impl FiniteProjector {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        Self::with_tolerance(matrix, label, PROJECTOR_TOL)
    }

    fn with_tolerance(matrix: CMatrix, label: impl Into<String>, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidOperator("projector is not square".into()));
        }
        check_dim(matrix.nrows())?;
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if herm > tol || idem > tol {
            return Err(Error::InvalidOperator(format!(
                "not an orthogonal projector: |P - P^dag| = {herm:e}, |P^2 - P| = {idem:e}"
            )));
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    /// Projector onto the span of the given basis indices.
    pub fn basis(dim: usize, indices: &[usize], label: impl Into<String>) -> Result<Self> {
        let mut m = CMatrix::zeros(dim, dim);
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidOperator(format!("basis index {i} out of range")));
            }
            m[(i, i)] = ONE;
        }
        Self::new(m, label)
    }

    /// `|v><v| / <v|v>`.
    pub fn rank_one(v: &CVector, label: impl Into<String>) -> Result<Self> {
        let n2 = v.norm_squared();
        if n2 < 1e-24 {
            return Err(Error::InvalidOperator("zero vector".into()));
        }
        Self::new(v * v.adjoint() / Complex64::new(n2, 0.0), label)
    }

    pub fn identity(dim: usize, label: impl Into<String>) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim), label)
    }

    /// `I - P`.
    pub fn complement(&self, label: impl Into<String>) -> Self {
        let n = self.dim();
        Self {
            matrix: CMatrix::identity(n, n) - &self.matrix,
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `U P U^dag`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self {
            matrix: u * &self.matrix * u.adjoint(),
            label: self.label.clone(),
        }
    }
}

/// Exhaustive, mutually exclusive projectors answering one question.
#[derive(Clone, Debug)]
pub struct ProjectorFamily {
    pub name: String,
    members: Vec<FiniteProjector>,
}

impl ProjectorFamily {
    pub fn new(name: impl Into<String>, members: Vec<FiniteProjector>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidOperator("empty projector family".into()))?;
        let n = first.dim();
        if members.iter().any(|p| p.dim() != n) {
            return Err(Error::InvalidOperator("family members differ in dimension".into()));
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let overlap = max_abs(&(a.matrix() * b.matrix()));
                if overlap > PROJECTOR_TOL {
                    return Err(Error::InvalidOperator(format!(
                        "members '{}' and '{}' are not exclusive ({overlap:e})",
                        a.label, b.label
                    )));
                }
            }
        }
        let sum = members.iter().fold(CMatrix::zeros(n, n), |acc, p| acc + p.matrix());
        let gap = max_abs(&(sum - CMatrix::identity(n, n)));
        if gap > PROJECTOR_TOL {
            return Err(Error::InvalidOperator(format!("family is not exhaustive ({gap:e})")));
        }
        Ok(Self {
            name: name.into(),
            members,
        })
    }

    /// `{P, I - P}`.
    pub fn yes_no(name: impl Into<String>, yes: FiniteProjector, no_label: impl Into<String>) -> Result<Self> {
        let no = yes.complement(no_label);
        Self::new(name, vec![yes, no])
    }

    /// One rank-one projector per basis vector.
    pub fn basis(name: impl Into<String>, space: &FiniteSpace) -> Result<Self> {
        let members = (0..space.dim)
            .map(|i| {
                let label = space
                    .labels
                    .as_ref()
                    .map_or_else(|| i.to_string(), |l| l[i].clone());
                FiniteProjector::basis(space.dim, &[i], label)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, members)
    }

    pub fn members(&self) -> &[FiniteProjector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn member(&self, i: usize) -> Result<&FiniteProjector> {
        self.members
            .get(i)
            .ok_or_else(|| Error::InvalidHistory(format!("family '{}' has no member {i}", self.name)))
    }

    pub fn conjugate(&self, u: &CMatrix) -> Self {
        Self {
            name: self.name.clone(),
            members: self.members.iter().map(|p| p.conjugate(u)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub family: usize,
    pub member: usize,
}

/// A time-ordered sequence of answers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History {
    #[serde(default)]
    pub label: String,
    events: Vec<Event>,
}

impl History {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidHistory("history has no events".into()));
        }
        if events.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::InvalidHistory("event times must strictly increase".into()));
        }
        Ok(Self {
            label: String::new(),
            events,
        })
    }

    pub fn from_tuples(events: &[(f64, usize, usize)]) -> Result<Self> {
        Self::new(
            events
                .iter()
                .map(|&(time, family, member)| Event { time, family, member })
                .collect(),
        )
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// `(time, family)` pairs; histories in one decoherence matrix must share it.
    pub fn schedule(&self) -> Vec<(f64, usize)> {
        self.events.iter().map(|e| (e.time, e.family)).collect()
    }

    /// Every combination of members over the given schedule.
    pub fn complete_set(schedule: &[(f64, usize)], families: &[ProjectorFamily]) -> Result<Vec<History>> {
        let mut out = vec![Vec::new()];
        for &(time, family) in schedule {
            let fam = families
                .get(family)
                .ok_or_else(|| Error::InvalidHistory(format!("unregistered family {family}")))?;
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Event>| {
                    (0..fam.len()).map(move |member| {
                        let mut h = prefix.clone();
                        h.push(Event { time, family, member });
                        h
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|events| {
                let label = events
                    .iter()
                    .map(|e| families[e.family].members[e.member].label.clone())
                    .collect::<Vec<_>>()
                    .join(",");
                History::new(events).map(|h| h.with_label(label))
            })
            .collect()
    }
}

/// `P(t) = e^{iHt} P e^{-iHt}`.
pub fn heisenberg_projector(p: &FiniteProjector, h: &Hermitian, t: f64) -> Result<FiniteProjector> {
    if p.dim() != h.dim() {
        return Err(Error::InvalidOperator("projector and Hamiltonian dimensions differ".into()));
    }
    let u = h.exp_i(t);
    let m = &u * p.matrix() * u.adjoint();
    FiniteProjector::with_tolerance(m, p.label.clone(), EVOLVED_PROJECTOR_TOL)
}

fn event_projector<'a>(e: &Event, families: &'a [ProjectorFamily]) -> Result<&'a FiniteProjector> {
    families
        .get(e.family)
        .ok_or_else(|| Error::InvalidHistory(format!("unregistered family {}", e.family)))?
        .member(e.member)
}

/// `C = P_k(t_k) ... P_1(t_1)`.
pub fn chain_operator(history: &History, families: &[ProjectorFamily], h: &Hermitian) -> Result<CMatrix> {
    let n = h.dim();
    let mut c = CMatrix::identity(n, n);
    for e in history.events() {
        let p = heisenberg_projector(event_projector(e, families)?, h, e.time)?;
        c = p.matrix() * c;
    }
    Ok(c)
}

/// `||C psi||^2`.
pub fn history_probability(c: &CMatrix, psi: &CVector) -> f64 {
    (c * psi).norm_squared()
}

/// The same probability computed in the Schrodinger picture: evolve, project,
/// evolve, project.
pub fn schrodinger_probability(
    history: &History,
    families: &[ProjectorFamily],
    h: &Hermitian,
    psi: &CVector,
) -> Result<f64> {
    let mut state = psi.clone();
    let mut t = 0.0;
    for e in history.events() {
        state = h.propagator(e.time - t) * state;
        state = event_projector(e, families)?.matrix() * state;
        t = e.time;
    }
    Ok(state.norm_squared())
}

/// `D(beta, alpha) = <psi| C_beta^dag C_alpha |psi>`.
#[derive(Clone, Debug)]
pub struct DecoherenceMatrix {
    pub matrix: CMatrix,
    pub epsilon: f64,
}

impl DecoherenceMatrix {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn total(&self) -> Complex64 {
        self.matrix.iter().sum()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn is_decoherent(&self) -> (bool, f64) {
        is_decoherent(self, self.epsilon)
    }
}

pub fn decoherence_functional(
    histories: &[History],
    families: &[ProjectorFamily],
    h: &Hermitian,
    psi: &CVector,
) -> Result<DecoherenceMatrix> {
    let first = histories
        .first()
        .ok_or_else(|| Error::InvalidHistory("no histories".into()))?;
    let schedule = first.schedule();
    if histories.iter().any(|x| x.schedule() != schedule) {
        return Err(Error::InvalidHistory("histories do not share one schedule".into()));
    }
    let branches: Vec<CVector> = histories
        .iter()
        .map(|x| chain_operator(x, families, h).map(|c| c * psi))
        .collect::<Result<_>>()?;
    let m = branches.len();
    let matrix = CMatrix::from_fn(m, m, |b, a| branches[b].dotc(&branches[a]));
    Ok(DecoherenceMatrix {
        matrix,
        epsilon: DEFAULT_EPSILON,
    })
}

/// True iff every off-diagonal magnitude is below `epsilon * max(diagonal)`;
/// also returns the largest off-diagonal magnitude.
pub fn is_decoherent(d: &DecoherenceMatrix, epsilon: f64) -> (bool, f64) {
    let witness = d.max_off_diagonal();
    let scale = d.diagonal().into_iter().fold(0.0, f64::max);
    (witness <= 0.0 || witness < epsilon * scale, witness)
}

/// `|p(coarse) - sum p(fine)|` for histories that differ only in one slot,
/// where the coarse history uses the sum of the fine projectors in that slot.
pub fn additivity_defect(
    histories: &[History],
    families: &[ProjectorFamily],
    h: &Hermitian,
    psi: &CVector,
) -> Result<f64> {
    let coarse = coarse_grained_chain(histories, families, h)?;
    let fine: f64 = histories
        .iter()
        .map(|x| chain_operator(x, families, h).map(|c| history_probability(&c, psi)))
        .sum::<Result<f64>>()?;
    Ok((history_probability(&coarse, psi) - fine).abs())
}

/// Chain operator of the coarse-grained history.
pub fn coarse_grained_chain(histories: &[History], families: &[ProjectorFamily], h: &Hermitian) -> Result<CMatrix> {
    let not_coarse = |why: &str| Error::InvalidHistory(format!("histories are not coarse-grainable: {why}"));
    let first = histories.first().ok_or_else(|| not_coarse("empty set"))?;
    if histories.len() < 2 {
        return Err(not_coarse("need at least two histories"));
    }
    let schedule = first.schedule();
    if histories.iter().any(|x| x.schedule() != schedule) {
        return Err(not_coarse("schedules differ"));
    }
    let differing: Vec<usize> = (0..schedule.len())
        .filter(|&k| histories.iter().any(|x| x.events[k].member != first.events[k].member))
        .collect();
    let &[slot] = differing.as_slice() else {
        return Err(not_coarse("histories must differ in exactly one slot"));
    };
    let mut members: Vec<usize> = histories.iter().map(|x| x.events[slot].member).collect();
    members.sort_unstable();
    if members.windows(2).any(|w| w[0] == w[1]) {
        return Err(not_coarse("repeated member in the differing slot"));
    }
    let n = h.dim();
    let mut c = CMatrix::identity(n, n);
    for (k, e) in first.events().iter().enumerate() {
        let p = if k == slot {
            let fam = &families[e.family];
            let sum = members
                .iter()
                .map(|&m| fam.member(m).map(|p| p.matrix().clone()))
                .sum::<Result<CMatrix>>()?;
            let u = h.exp_i(e.time);
            &u * sum * u.adjoint()
        } else {
            heisenberg_projector(event_projector(e, families)?, h, e.time)?.matrix().clone()
        };
        c = p * c;
    }
    Ok(c)
}

/// Sum over distinct pairs of `2 Re D(beta, alpha)`.
pub fn interference_term(d: &DecoherenceMatrix) -> f64 {
    let n = d.matrix.nrows();
    let mut s = 0.0;
    for b in 0..n {
        for a in (b + 1)..n {
            s += 2.0 * d.matrix[(b, a)].re;
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub label: String,
    /// Probability of the observed final record.
    pub probability: f64,
    /// Probability of every member of the final family.
    pub conditional: Vec<f64>,
    pub possible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrodictionReport {
    pub observed: String,
    pub members: Vec<String>,
    pub time: f64,
    pub threshold: f64,
    pub candidates: Vec<CandidateRow>,
    pub ambiguous: bool,
    pub verdict: String,
}

/// Which candidate initial states could have produced the observed final
/// record? The past is ambiguous when two or more candidates give it a
/// probability above `threshold`.
pub fn cat_retrodiction(
    family: &ProjectorFamily,
    observed: usize,
    candidates: &[(String, CVector)],
    h: &Hermitian,
    time: f64,
    threshold: f64,
) -> Result<RetrodictionReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidHistory("no candidate initial states".into()));
    }
    let target = family.member(observed)?;
    let evolved: Vec<FiniteProjector> = family
        .members()
        .iter()
        .map(|p| heisenberg_projector(p, h, time))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (label, psi) in candidates {
        let norm = psi.norm();
        if psi.len() != h.dim() || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidHistory(format!("candidate '{label}' is not a normalized state")));
        }
        let conditional: Vec<f64> = evolved
            .iter()
            .map(|p| history_probability(p.matrix(), psi))
            .collect();
        let probability = conditional[observed];
        rows.push(CandidateRow {
            label: label.clone(),
            probability,
            conditional,
            possible: probability > threshold,
        });
    }
    if rows.iter().all(|r| r.probability <= 1e-12) {
        return Err(Error::InvalidHistory(format!(
            "record '{}' is impossible under every candidate",
            target.label
        )));
    }
    let possible = rows.iter().filter(|r| r.possible).count();
    let ambiguous = possible >= 2;
    Ok(RetrodictionReport {
        observed: target.label.clone(),
        members: family.members().iter().map(|p| p.label.clone()).collect(),
        time,
        threshold,
        candidates: rows,
        ambiguous,
        verdict: if ambiguous { "past ambiguous" } else { "unambiguous" }.into(),
    })
}

// ---------------------------------------------------------------------------
// JSON model files

/// Complex number as `[re, im]`.
pub type JsonComplex = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub label: String,
    /// Dense matrix, rows of `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<JsonComplex>>>,
    /// Alternatively, the basis indices spanned by a diagonal projector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub members: Vec<MemberSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub label: String,
    pub state: Vec<JsonComplex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    pub family: usize,
    pub member: usize,
    pub time: f64,
}

/// On-disk description of a finite model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub hamiltonian: Vec<Vec<JsonComplex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<JsonComplex>>,
    pub families: Vec<FamilySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histories: Vec<History>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSpec>,
}

/// A validated finite model.
#[derive(Clone, Debug)]
pub struct Model {
    pub space: FiniteSpace,
    pub hamiltonian: Hermitian,
    pub state: Option<CVector>,
    pub families: Vec<ProjectorFamily>,
    pub histories: Vec<History>,
    pub candidates: Vec<(String, CVector)>,
    pub observation: Option<ObservationSpec>,
}

fn bad_model(msg: impl Into<String>) -> Error {
    Error::InvalidModel(msg.into())
}

fn matrix_from_json(rows: &[Vec<JsonComplex>], n: usize, what: &str) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(bad_model(format!("{what} must be {n}x{n}")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

fn vector_from_json(v: &[JsonComplex], n: usize, what: &str) -> Result<CVector> {
    if v.len() != n {
        return Err(bad_model(format!("{what} must have {n} entries")));
    }
    Ok(CVector::from_iterator(n, v.iter().map(|z| Complex64::new(z[0], z[1]))))
}

pub fn matrix_to_json(m: &CMatrix) -> Vec<Vec<JsonComplex>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn vector_to_json(v: &CVector) -> Vec<JsonComplex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Model> {
        let n = self.dimension;
        let space = match &self.labels {
            Some(l) if l.len() != n => return Err(bad_model("label count differs from dimension")),
            Some(l) => FiniteSpace::with_labels(l.clone())?,
            None => FiniteSpace::new(n)?,
        };
        let hamiltonian = Hermitian::new(matrix_from_json(&self.hamiltonian, n, "hamiltonian")?)?;
        let state = self
            .state
            .as_ref()
            .map(|s| vector_from_json(s, n, "state"))
            .transpose()?;
        let families = self
            .families
            .iter()
            .map(|f| {
                let members = f
                    .members
                    .iter()
                    .map(|m| match (&m.matrix, &m.basis) {
                        (Some(rows), None) => FiniteProjector::new(matrix_from_json(rows, n, &m.label)?, &m.label),
                        (None, Some(idx)) => FiniteProjector::basis(n, idx, &m.label),
                        _ => Err(bad_model(format!("member '{}' needs exactly one of matrix or basis", m.label))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                ProjectorFamily::new(&f.name, members)
            })
            .collect::<Result<Vec<_>>>()?;
        for x in &self.histories {
            History::new(x.events.clone())?;
            for e in &x.events {
                event_projector(e, &families)?;
            }
        }
        let candidates = self
            .candidates
            .iter()
            .map(|c| Ok((c.label.clone(), vector_from_json(&c.state, n, &c.label)?)))
            .collect::<Result<Vec<_>>>()?;
        if let Some(o) = &self.observation {
            families
                .get(o.family)
                .ok_or_else(|| bad_model("observation names an unknown family"))?
                .member(o.member)?;
        }
        Ok(Model {
            space,
            hamiltonian,
            state,
            families,
            histories: self.histories.clone(),
            candidates,
            observation: self.observation.clone(),
        })
    }
}

impl Model {
    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            dimension: self.space.dim,
            labels: self.space.labels.clone(),
            hamiltonian: matrix_to_json(self.hamiltonian.matrix()),
            state: self.state.as_ref().map(vector_to_json),
            families: self
                .families
                .iter()
                .map(|f| FamilySpec {
                    name: f.name.clone(),
                    members: f
                        .members()
                        .iter()
                        .map(|p| MemberSpec {
                            label: p.label.clone(),
                            matrix: Some(matrix_to_json(p.matrix())),
                            basis: None,
                        })
                        .collect(),
                })
                .collect(),
            histories: self.histories.clone(),
            candidates: self
                .candidates
                .iter()
                .map(|(label, v)| CandidateSpec {
                    label: label.clone(),
                    state: vector_to_json(v),
                })
                .collect(),
            observation: self.observation.clone(),
        }
    }

    /// Retrodiction report for the model's observation and candidates.
    pub fn retrodict(&self, threshold: f64) -> Result<RetrodictionReport> {
        let o = self
            .observation
            .as_ref()
            .ok_or_else(|| bad_model("model has no observation"))?;
        cat_retrodiction(
            &self.families[o.family],
            o.member,
            &self.candidates,
            &self.hamiltonian,
            o.time,
            threshold,
        )
    }
}

// ---------------------------------------------------------------------------
// Toy models

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Two paths `{A, B}`, source state `(|A> + |B>)/sqrt2`, and a screen
/// detector `|d> = (|A> + e^{i phi}|B>)/sqrt2`. Paths are asked at `t = 1`,
/// the detector at `t = 2`, with `H = 0`.
///
/// With `which_path` set, each path is entangled with an orthogonal record
/// state, giving a 4-dim space ordered `|path, record>`.
pub fn two_slit_toy(phi: f64, which_path: bool) -> Result<Model> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d2 = CVector::from_vec(vec![c(s, 0.0), Complex64::from_polar(s, phi)]);
    let (space, state, path_a, path_b, detector) = if which_path {
        let space = FiniteSpace::with_labels(
            ["A,rA", "A,rB", "B,rA", "B,rB"].iter().map(|l| l.to_string()).collect(),
        )?;
        let state = CVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let pa = FiniteProjector::basis(4, &[0, 1], "A")?;
        let pb = FiniteProjector::basis(4, &[2, 3], "B")?;
        let dd = d2.clone() * d2.adjoint();
        let det = dd.kronecker(&CMatrix::identity(2, 2));
        (space, state, pa, pb, FiniteProjector::new(det, "d")?)
    } else {
        let space = FiniteSpace::with_labels(vec!["A".into(), "B".into()])?;
        let state = CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let pa = FiniteProjector::basis(2, &[0], "A")?;
        let pb = FiniteProjector::basis(2, &[1], "B")?;
        (space, state, pa, pb, FiniteProjector::rank_one(&d2, "d")?)
    };
    let n = space.dim;
    let families = vec![
        ProjectorFamily::new("path", vec![path_a, path_b])?,
        ProjectorFamily::yes_no("screen", detector, "not d")?,
    ];
    let histories = vec![
        History::from_tuples(&[(1.0, 0, 0), (2.0, 1, 0)])?.with_label("A,d"),
        History::from_tuples(&[(1.0, 0, 1), (2.0, 1, 0)])?.with_label("B,d"),
    ];
    Ok(Model {
        space,
        hamiltonian: Hermitian::zero(n)?,
        state: Some(state),
        families,
        histories,
        candidates: Vec::new(),
        observation: None,
    })
}

/// Cat and trigger, basis `|alive,armed>, |alive,fired>, |dead,armed>,
/// |dead,fired>`. Over `[0, time]` the Hamiltonian rotates the fired states
/// by a quarter turn, so both `|alive,armed>` and
/// `(|alive,fired> + |dead,fired>)/sqrt2` end with the cat alive.
pub fn cat_model(time: f64) -> Result<Model> {
    if !(time > 0.0) {
        return Err(bad_model("cat model needs a positive time"));
    }
    let space = FiniteSpace::with_labels(
        ["alive,armed", "alive,fired", "dead,armed", "dead,fired"]
            .iter()
            .map(|l| l.to_string())
            .collect(),
    )?;
    // H = -(pi / 4T) sigma_y on span{|alive,fired>, |dead,fired>}
    let g = std::f64::consts::PI / (4.0 * time);
    let mut h = CMatrix::zeros(4, 4);
    h[(1, 3)] = c(0.0, g);
    h[(3, 1)] = c(0.0, -g);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let candidates = vec![
        ("alive,armed".to_string(), space.basis(0)),
        (
            "(alive,fired + dead,fired)/sqrt2".to_string(),
            CVector::from_vec(vec![ZERO, c(s, 0.0), ZERO, c(s, 0.0)]),
        ),
    ];
    let families = vec![ProjectorFamily::new(
        "cat",
        vec![
            FiniteProjector::basis(4, &[0, 1], "alive")?,
            FiniteProjector::basis(4, &[2, 3], "dead")?,
        ],
    )?];
    Ok(Model {
        space,
        hamiltonian: Hermitian::new(h)?,
        state: None,
        families,
        histories: Vec::new(),
        candidates,
        observation: Some(ObservationSpec {
            family: 0,
            member: 0,
            time,
        }),
    })
}

/// Frozen two-state cat (`H = 0`) with candidates `|alive>` and
/// `(|alive> + |dead>)/sqrt2`.
pub fn frozen_cat() -> Result<Model> {
    let space = FiniteSpace::with_labels(vec!["alive".into(), "dead".into()])?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Model {
        candidates: vec![
            ("alive".into(), space.basis(0)),
            ("(alive + dead)/sqrt2".into(), CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)])),
        ],
        families: vec![ProjectorFamily::basis("cat", &space)?],
        space,
        hamiltonian: Hermitian::zero(2)?,
        state: None,
        histories: Vec::new(),
        observation: Some(ObservationSpec {
            family: 0,
            member: 0,
            time: 1.0,
        }),
    })
}
