//! Density matrices: Bures angle, measurement distances, and the
//! transition-operator measurement.
//!
//! For mixed states the natural analogue of the dyad `|ψ2⟩⟨ψ1|` is the
//! transition operator `W1 W2†` with `ρ_i = W_i W_i†`. Here `W_i` is the
//! principal square root. Measuring in a basis that equi-diagonalizes it is
//! optimal on pure inputs but in general falls short of the Bures angle,
//! which is the best any measurement can do.

use num_complex::Complex64;

use crate::defaults::TOL_EQUIDIAG;
use crate::equidiag::equi_diagonalize;
use crate::linalg::{hermitian_eigh, hermitian_function, hermitian_part, hermiticity_defect, trace};
use crate::measure::{bhattacharyya_angle_raw, Povm};
use crate::oracle::{minimize_over_bases, SearchConfig};
use crate::rng::CounterRng;
use crate::statekit::PureState;
use crate::{CMatrix, Error, Result};

/// Largest dimension accepted by [`transition_equidiag_gap`].
pub const GAP_DIM_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    rho: CMatrix,
}

impl MixedState {
    /// Hermiticity defect at most 1e-12, trace within 1e-10 of one, smallest
    /// eigenvalue at least -1e-10. The stored matrix is the Hermitian part.
    pub fn new(rho: CMatrix) -> Result<Self> {
        let n = rho.nrows();
        if n == 0 || rho.ncols() != n {
            return Err(Error::Dimension(format!("density matrix must be square, got {}x{}", n, rho.ncols())));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix"));
        }
        let defect = hermiticity_defect(&rho);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let rho = hermitian_part(&rho);
        let tr = trace(&rho);
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let (values, _) = hermitian_eigh(&rho);
        if values[0] < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {:e}", values[0])));
        }
        Ok(Self { rho })
    }

    pub fn pure(s: &PureState) -> Self {
        let n = s.dim();
        let a = s.amps();
        Self { rho: CMatrix::from_fn(n, n, |r, c| a[r] * a[c].conj()) }
    }

    /// `G G† / tr(G G†)` for a seeded square Ginibre `G`; full rank almost surely.
    pub fn random_full_rank(dim: usize, seed: u64) -> Self {
        let g = CounterRng::new(seed).ginibre(dim, dim);
        let rho = &g * g.adjoint();
        let tr = trace(&rho).re;
        Self { rho: hermitian_part(&rho.unscale(tr)) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues below `8 n ε · max|λ|` are treated as zero: the square root
/// would otherwise turn a roundoff eigenvalue of `1e-17` into `3e-9`.
pub fn principal_sqrt(m: &CMatrix) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("square root of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let scale = crate::linalg::max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let (values, _) = hermitian_eigh(m);
    let top = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = 8.0 * m.nrows() as f64 * f64::EPSILON * top;
    Ok(hermitian_function(m, |x| if x > floor { x.sqrt() } else { 0.0 }))
}

fn check_dims(r1: &MixedState, r2: &MixedState) -> Result<()> {
    if r1.dim() != r2.dim() {
        return Err(Error::Dimension(format!("density matrices of dimension {} and {}", r1.dim(), r2.dim())));
    }
    Ok(())
}

/// Root fidelity `tr √(√ρ1 ρ2 √ρ1)`, evaluated as the trace norm of
/// `√ρ1 √ρ2` (same value, since `(√ρ1 √ρ2)(√ρ1 √ρ2)† = √ρ1 ρ2 √ρ1`).
pub fn root_fidelity(r1: &MixedState, r2: &MixedState) -> Result<f64> {
    check_dims(r1, r2)?;
    let product = principal_sqrt(&r1.rho)? * principal_sqrt(&r2.rho)?;
    Ok(product.singular_values().iter().sum())
}

/// `arccos F`, the largest measurement distance between two density matrices.
pub fn bures_angle(r1: &MixedState, r2: &MixedState) -> Result<f64> {
    Ok(root_fidelity(r1, r2)?.clamp(0.0, 1.0).acos())
}

fn outcome_probs(r: &MixedState, basis_or_povm: impl Iterator<Item = Vec<Complex64>>) -> Vec<f64> {
    basis_or_povm
        .map(|phi| {
            let v = nalgebra::DVector::from_vec(phi);
            (v.adjoint() * &r.rho * &v)[(0, 0)].re.max(0.0)
        })
        .collect()
}

/// Bhattacharyya angle between `q_k,i = ⟨φ_i|ρ_k|φ_i⟩`.
pub fn mixed_measurement_distance(r1: &MixedState, r2: &MixedState, povm: &Povm) -> Result<f64> {
    check_dims(r1, r2)?;
    if povm.dim() != r1.dim() {
        return Err(Error::Dimension(format!("POVM of dimension {} for states of dimension {}", povm.dim(), r1.dim())));
    }
    let q1 = outcome_probs(r1, povm.elements().iter().cloned());
    let q2 = outcome_probs(r2, povm.elements().iter().cloned());
    bhattacharyya_angle_raw(&q1, &q2)
}

fn basis_columns(basis: &CMatrix) -> impl Iterator<Item = Vec<Complex64>> + '_ {
    (0..basis.ncols()).map(move |k| basis.column(k).iter().copied().collect())
}

/// `T = W1 W2†` with `W_i = √ρ_i`.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    pub w1: CMatrix,
    pub w2: CMatrix,
    pub matrix: CMatrix,
}

pub fn transition_operator(r1: &MixedState, r2: &MixedState) -> Result<TransitionOperator> {
    check_dims(r1, r2)?;
    let w1 = principal_sqrt(&r1.rho)?;
    let w2 = principal_sqrt(&r2.rho)?;
    let matrix = &w1 * w2.adjoint();
    Ok(TransitionOperator { w1, w2, matrix })
}

#[derive(Debug, Clone)]
pub struct TransitionGap {
    /// Measurement distance achieved by the equi-diagonal basis of `W1 W2†`.
    pub d_equidiag: f64,
    pub d_bures: f64,
    /// `d_bures − d_equidiag`.
    pub gap: f64,
    pub basis: CMatrix,
}

/// How far the transition-operator measurement falls short of the Bures angle.
pub fn transition_equidiag_gap(r1: &MixedState, r2: &MixedState) -> Result<TransitionGap> {
    check_dims(r1, r2)?;
    if r1.dim() > GAP_DIM_CAP {
        return Err(Error::Usage(format!("dimension {} exceeds {GAP_DIM_CAP}", r1.dim())));
    }
    let t = transition_operator(r1, r2)?;
    let eq = equi_diagonalize(&t.matrix, TOL_EQUIDIAG)?;
    let d_equidiag = mixed_measurement_distance(r1, r2, &Povm::from_basis(&eq.basis)?)?;
    let d_bures = bures_angle(r1, r2)?;
    Ok(TransitionGap { d_equidiag, d_bures, gap: d_bures - d_equidiag, basis: eq.basis })
}

/// Search orthonormal bases for the largest mixed-state measurement distance.
pub fn optimize_mixed_measurement(r1: &MixedState, r2: &MixedState, cfg: &SearchConfig) -> Result<(f64, CMatrix)> {
    check_dims(r1, r2)?;
    if r1.dim() > cfg.dim_cap {
        return Err(Error::Usage(format!("dimension {} exceeds the search cap {}", r1.dim(), cfg.dim_cap)));
    }
    let objective = |u: &CMatrix| -> f64 {
        let q1 = outcome_probs(r1, basis_columns(u));
        let q2 = outcome_probs(r2, basis_columns(u));
        q1.iter().zip(&q2).map(|(a, b)| (a * b).sqrt()).sum()
    };
    let (_, basis) = minimize_over_bases(r1.dim(), cfg, objective)?;
    let d = mixed_measurement_distance(r1, r2, &Povm::from_basis(&basis)?)?;
    Ok((d, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::global_distance;
    use crate::statekit::{random_state_pair, PartyLayout};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(a: f64, b: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(a), c(0.0), c(0.0), c(b)])
    }

    #[test]
    fn validation() {
        assert!(MixedState::new(diag(0.5, 0.5)).is_ok());
        assert!(matches!(MixedState::new(diag(0.6, 0.5)), Err(Error::InvalidDensity(_))));
        assert!(matches!(MixedState::new(diag(1.2, -0.2)), Err(Error::InvalidDensity(_))));
        let mut m = diag(0.5, 0.5);
        m[(0, 1)] = c(0.1);
        assert!(matches!(MixedState::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrt_examples() {
        let s = principal_sqrt(&diag(0.5, 0.5)).unwrap();
        assert!((s[(0, 0)] - c(FRAC_1_SQRT_2)).norm() < 1e-15 && (s[(1, 1)] - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(s[(0, 1)].norm() < 1e-15);
        let p = principal_sqrt(&diag(1.0, 0.0)).unwrap();
        assert!(crate::linalg::max_abs(&(p - diag(1.0, 0.0))) < 1e-15);
        for seed in 0..10 {
            let r = MixedState::random_full_rank(4, seed);
            let s = principal_sqrt(r.matrix()).unwrap();
            assert!(crate::linalg::max_abs(&(&s * &s - r.matrix())) <= 1e-10);
            assert!(hermiticity_defect(&s) < 1e-14);
        }
        let mut bad = diag(1.0, 0.0);
        bad[(0, 1)] = c(1.0);
        assert!(matches!(principal_sqrt(&bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn bures_examples() {
        let r = MixedState::random_full_rank(3, 2);
        // arccos near 1 amplifies roundoff in F to ~1e-8
        assert!(bures_angle(&r, &r).unwrap() < 1e-7);
        let a = MixedState::new(diag(1.0, 0.0)).unwrap();
        let b = MixedState::new(diag(0.5, 0.5)).unwrap();
        assert!((bures_angle(&a, &b).unwrap() - FRAC_PI_4).abs() < 1e-12);
        let l = PartyLayout::single(2).unwrap();
        let z = PureState::basis(l.clone(), 0).unwrap();
        let plus = PureState::new(l, vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        assert!((bures_angle(&MixedState::pure(&z), &MixedState::pure(&plus)).unwrap() - FRAC_PI_4).abs() < 1e-10);
    }

    #[test]
    fn bures_matches_pure_distance() {
        let l = PartyLayout::new(vec![2, 3]).unwrap();
        for seed in 0..20 {
            let (s1, s2) = random_state_pair(&l, seed);
            let b = bures_angle(&MixedState::pure(&s1), &MixedState::pure(&s2)).unwrap();
            assert!((b - global_distance(&s1, &s2).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn measurement_distance_examples() {
        let a = MixedState::new(diag(1.0, 0.0)).unwrap();
        let b = MixedState::new(diag(0.5, 0.5)).unwrap();
        let std = Povm::standard(2).unwrap();
        assert!((mixed_measurement_distance(&a, &b, &std).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let mut rng = CounterRng::new(4);
        let r = MixedState::random_full_rank(2, 8);
        let p = Povm::random(2, 4, &mut rng).unwrap();
        assert_eq!(mixed_measurement_distance(&r, &r, &p).unwrap(), 0.0);
    }

    #[test]
    fn random_povms_stay_below_bures() {
        let mut rng = CounterRng::new(10);
        for seed in 0..5 {
            let r1 = MixedState::random_full_rank(2, 2 * seed);
            let r2 = MixedState::random_full_rank(2, 2 * seed + 1);
            let bures = bures_angle(&r1, &r2).unwrap();
            for k in 0..200 {
                let p = Povm::random(2, 2 + k % 3, &mut rng).unwrap();
                assert!(mixed_measurement_distance(&r1, &r2, &p).unwrap() <= bures + 1e-9);
            }
        }
    }

    #[test]
    fn pure_inputs_have_no_gap() {
        let l = PartyLayout::single(3).unwrap();
        for seed in 0..10 {
            let (s1, s2) = random_state_pair(&l, seed);
            let g = transition_equidiag_gap(&MixedState::pure(&s1), &MixedState::pure(&s2)).unwrap();
            assert!(g.gap.abs() <= 1e-9, "gap {}", g.gap);
        }
    }

    /// Equalizing the diagonal of W1 W2† = diag(1/√2, 0) forces |u_0|² = 1/2 for
    /// both basis vectors, so both outcome distributions are (1/2, 1/2) and the
    /// measurement sees no difference at all: the gap is the whole π/4.
    #[test]
    fn commuting_pair_gap_is_forced() {
        let a = MixedState::new(diag(1.0, 0.0)).unwrap();
        let b = MixedState::new(diag(0.5, 0.5)).unwrap();
        let g = transition_equidiag_gap(&a, &b).unwrap();
        assert!(g.d_equidiag.abs() < 1e-9);
        assert!((g.gap - FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn transition_trace_bounded() {
        for seed in 0..10 {
            let r1 = MixedState::random_full_rank(3, seed);
            let r2 = MixedState::random_full_rank(3, seed + 100);
            let t = transition_operator(&r1, &r2).unwrap();
            assert!(trace(&t.matrix).norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn optimizer_attains_bures_on_qubits() {
        for seed in 0..3 {
            let r1 = MixedState::random_full_rank(2, 2 * seed);
            let r2 = MixedState::random_full_rank(2, 2 * seed + 1);
            let (d, _) = optimize_mixed_measurement(&r1, &r2, &SearchConfig { seed, ..Default::default() }).unwrap();
            let bures = bures_angle(&r1, &r2).unwrap();
            assert!(d <= bures + 1e-9);
            assert!(bures - d <= 1e-4, "bures {bures} vs {d}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = MixedState::random_full_rank(2, 0);
        let b = MixedState::random_full_rank(3, 0);
        assert!(matches!(bures_angle(&a, &b), Err(Error::Dimension(_))));
    }
}
