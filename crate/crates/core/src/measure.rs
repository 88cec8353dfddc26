//! Rank-1 POVMs, outcome distributions and the distances built on them.
//!
//! Angles are evaluated in half-angle form. For normalized distributions
//! `Σ √(p_i q_i) = 1 − ½ Σ (√p_i − √q_i)²`, so
//! `arccos Σ √(p_i q_i) = 2 asin(‖√p − √q‖ / 2)`. The right-hand side keeps
//! full relative precision near zero distance, where `arccos` of a sum
//! rounded to `1 − ε` would report `√(2ε) ≈ 1e-8`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::defaults::{DYAD_MATRIX_CAP, TOL_POVM};
use crate::equidiag::{equi_diagonalize, EquiDiagResult};
use crate::rng::CounterRng;
use crate::statekit::{state_overlap, Dyad, PureState};
use crate::{CMatrix, Error, Result};

/// Rank-1 POVM given by (possibly unnormalized) vectors `|φ_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<Vec<Complex64>>,
    dim: usize,
}

impl Povm {
    /// Rejects element sets whose completeness defect exceeds [`TOL_POVM`].
    pub fn new(elements: Vec<Vec<Complex64>>) -> Result<Self> {
        let defect = validate_povm(&elements)?;
        if defect > TOL_POVM {
            return Err(Error::IncompletePovm(defect));
        }
        let dim = elements[0].len();
        Ok(Self { elements, dim })
    }

    /// Columns of a unitary as a projective measurement.
    pub fn from_basis(basis: &CMatrix) -> Result<Self> {
        Self::new((0..basis.ncols()).map(|k| basis.column(k).iter().copied().collect()).collect())
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::from_basis(&CMatrix::identity(dim, dim))
    }

    /// Random rank-1 POVM with `n_elements ≥ dim` outcomes: the rows of the
    /// first `dim` columns of a Haar `n_elements × n_elements` unitary form an
    /// isometry, so completeness holds by construction.
    pub fn random(dim: usize, n_elements: usize, rng: &mut CounterRng) -> Result<Self> {
        if n_elements < dim {
            return Err(Error::Usage(format!("a rank-1 POVM on dimension {dim} needs at least {dim} elements")));
        }
        let u = rng.haar_unitary(n_elements);
        let elements = (0..n_elements).map(|i| (0..dim).map(|k| u[(i, k)].conj()).collect()).collect();
        Self::new(elements)
    }

    pub fn elements(&self) -> &[Vec<Complex64>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `max |Σ_i |φ_i⟩⟨φ_i| − I|` over entries.
pub fn validate_povm(elements: &[Vec<Complex64>]) -> Result<f64> {
    let dim = elements.first().map(Vec::len).ok_or_else(|| Error::Usage("POVM needs at least one element".into()))?;
    if dim == 0 || elements.iter().any(|e| e.len() != dim) {
        return Err(Error::Dimension("POVM elements have unequal or zero length".into()));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for e in elements {
        for c in 0..dim {
            let ec = e[c].conj();
            for r in 0..dim {
                sum[(r, c)] += e[r] * ec;
            }
        }
    }
    let mut defect = 0.0f64;
    for c in 0..dim {
        for r in 0..dim {
            let target = if r == c { 1.0 } else { 0.0 };
            defect = defect.max((sum[(r, c)] - target).norm());
        }
    }
    Ok(defect)
}

/// A probability vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Values down to `-1e-14` are clamped to zero; the sum must be within
    /// `1e-10` of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < -1e-14) {
            return Err(Error::Usage("probabilities must be finite and non-negative".into()));
        }
        let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Usage(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `p_j = |⟨φ_j|s⟩|²`.
pub fn outcome_distribution(s: &PureState, povm: &Povm) -> Result<ProbDist> {
    if s.dim() != povm.dim() {
        return Err(Error::Dimension(format!("state of dimension {} vs POVM of dimension {}", s.dim(), povm.dim())));
    }
    ProbDist::new(povm.elements().iter().map(|e| amplitude(e, s.amps()).norm_sqr()).collect())
}

fn amplitude(phi: &[Complex64], psi: &[Complex64]) -> Complex64 {
    phi.iter().zip(psi).map(|(a, b)| a.conj() * b).sum()
}

/// Angle between two probability vectors given as square roots, in half-angle form.
fn root_angle(sp: impl Iterator<Item = f64>, sq: impl Iterator<Item = f64>) -> f64 {
    let chord_sq: f64 = sp.zip(sq).map(|(a, b)| (a - b) * (a - b)).sum();
    let half = (chord_sq.sqrt() / 2.0).min(1.0);
    (2.0 * half.asin()).clamp(0.0, FRAC_PI_2)
}

/// Bhattacharyya angle `arccos Σ √(p_i q_i)`, in `[0, π/2]`.
pub fn bhattacharyya_angle(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    bhattacharyya_angle_raw(p.probs(), q.probs())
}

pub(crate) fn bhattacharyya_angle_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    Ok(root_angle(p.iter().map(|x| x.max(0.0).sqrt()), q.iter().map(|x| x.max(0.0).sqrt())))
}

/// `Σ_i |⟨φ_i|s2⟩⟨s1|φ_i⟩|`, the cosine of the measurement distance.
pub fn measurement_overlap_sum(s1: &PureState, s2: &PureState, povm: &Povm) -> Result<f64> {
    check_triple(s1, s2, povm)?;
    Ok(povm
        .elements()
        .iter()
        .map(|e| (amplitude(e, s2.amps()) * amplitude(e, s1.amps()).conj()).norm())
        .sum())
}

/// Distance between `s1` and `s2` as seen through one measurement.
pub fn measurement_distance(s1: &PureState, s2: &PureState, povm: &Povm) -> Result<f64> {
    check_triple(s1, s2, povm)?;
    let a1 = povm.elements().iter().map(|e| amplitude(e, s1.amps()).norm());
    let a2 = povm.elements().iter().map(|e| amplitude(e, s2.amps()).norm());
    Ok(root_angle(a1, a2))
}

fn check_triple(s1: &PureState, s2: &PureState, povm: &Povm) -> Result<()> {
    if s1.dim() != povm.dim() || s2.dim() != povm.dim() {
        return Err(Error::Dimension(format!(
            "states of dimension {} and {} vs POVM of dimension {}",
            s1.dim(),
            s2.dim(),
            povm.dim()
        )));
    }
    Ok(())
}

/// `arccos |⟨s1|s2⟩|`, the angle between the states.
pub fn global_distance(s1: &PureState, s2: &PureState) -> Result<f64> {
    let ov = state_overlap(s1, s2)?;
    // align s2's phase with s1, then use the chord ‖s1 − e^{iθ}s2‖ = 2 sin(d/2)
    let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { Complex64::new(1.0, 0.0) };
    let chord_sq: f64 = s1.amps().iter().zip(s2.amps()).map(|(a, b)| (a - b * phase).norm_sqr()).sum();
    let half = (chord_sq.sqrt() / 2.0).min(1.0);
    Ok((2.0 * half.asin()).clamp(0.0, FRAC_PI_2))
}

/// Equi-diagonalize the dyad `|s2⟩⟨s1|` as a dense matrix.
pub fn dyad_equidiag_basis(s1: &PureState, s2: &PureState, tol: f64) -> Result<EquiDiagResult> {
    let dyad = Dyad::from_states(s1, s2)?;
    if s1.dim() > DYAD_MATRIX_CAP {
        return Err(Error::Usage(format!(
            "dyad matrix of dimension {} exceeds the cap of {DYAD_MATRIX_CAP}",
            s1.dim()
        )));
    }
    equi_diagonalize(&dyad.to_matrix(), tol)
}
