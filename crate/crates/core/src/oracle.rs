//! Brute-force measurement search, independent of the constructive modules.
//!
//! Hill climbing over orthonormal bases: each step multiplies the current
//! basis by `exp(step · K)` with `K` a seeded random skew-Hermitian matrix,
//! keeps the move and quadruples the step (capped at 1) if the objective
//! improves, and halves the step otherwise. Restarts begin from independent
//! Haar bases.

use num_complex::Complex64;

use crate::defaults::{INITIAL_STEP, RESTARTS, SEARCH_DIM_CAP, STEPS};
use crate::linalg::{expm, orthonormalize_columns};
use crate::measure::{measurement_distance, Povm};
use crate::rng::{derive_seed, CounterRng};
use crate::statekit::{state_overlap, PartyLayout, PureState};
use crate::{CMatrix, Error, Result};

/// Largest dimension accepted by [`sample_bound_check`].
pub const BOUND_CHECK_DIM_CAP: usize = 16;

/// Growth applied to the step after an accepted move, capped at 1.
const STEP_GROWTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub steps: usize,
    pub initial_step: f64,
    pub seed: u64,
    pub dim_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { restarts: RESTARTS, steps: STEPS, initial_step: INITIAL_STEP, seed: 0, dim_cap: SEARCH_DIM_CAP }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.steps == 0 {
            return Err(Error::Usage("restarts and steps must be at least 1".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(Error::Usage(format!("initial step {} must lie in (0, 1]", self.initial_step)));
        }
        Ok(())
    }
}

/// Minimize `objective` over `dim × dim` unitaries. Returns the best value
/// and basis; ties between restarts go to the lower restart index.
pub fn minimize_over_bases(dim: usize, cfg: &SearchConfig, objective: impl Fn(&CMatrix) -> f64) -> Result<(f64, CMatrix)> {
    cfg.validate()?;
    let mut best: Option<(f64, CMatrix)> = None;
    for restart in 0..cfg.restarts {
        let mut rng = CounterRng::new(derive_seed(cfg.seed, restart as u64));
        let mut basis = rng.haar_unitary(dim);
        let mut value = objective(&basis);
        let mut step = cfg.initial_step;
        for _ in 0..cfg.steps {
            let g = rng.ginibre(dim, dim);
            let skew = (&g - g.adjoint()).scale(0.5 * step);
            let mut candidate = &basis * expm(&skew);
            orthonormalize_columns(&mut candidate);
            let v = objective(&candidate);
            if v < value {
                basis = candidate;
                value = v;
                step = (step * STEP_GROWTH).min(1.0);
            } else {
                step *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, basis));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `Σ_i |⟨u_i|s2⟩⟨s1|u_i⟩|` for the columns `u_i` of `basis`.
pub fn basis_overlap_sum(s1: &PureState, s2: &PureState, basis: &CMatrix) -> f64 {
    (0..basis.ncols())
        .map(|k| {
            let col = basis.column(k);
            let a1: Complex64 = col.iter().zip(s1.amps()).map(|(u, s)| u.conj() * s).sum();
            let a2: Complex64 = col.iter().zip(s2.amps()).map(|(u, s)| u.conj() * s).sum();
            a1.norm() * a2.norm()
        })
        .sum()
}

/// Search orthonormal bases for the one that best separates `s1` from `s2`.
/// Returns the largest measurement distance found and its basis.
pub fn optimize_global_measurement(s1: &PureState, s2: &PureState, cfg: &SearchConfig) -> Result<(f64, CMatrix)> {
    state_overlap(s1, s2)?;
    let dim = s1.dim();
    if dim > cfg.dim_cap {
        return Err(Error::Usage(format!("dimension {dim} exceeds the search cap {}", cfg.dim_cap)));
    }
    let (_, basis) = minimize_over_bases(dim, cfg, |u| basis_overlap_sum(s1, s2, u))?;
    let distance = measurement_distance(s1, s2, &Povm::from_basis(&basis)?)?;
    Ok((distance, basis))
}

/// Over `trials` seeded draws of a state pair and a random rank-1 POVM with
/// `dim` or `2·dim` elements, the largest `|⟨s1|s2⟩| − Σ_i |⟨φ_i|s2⟩⟨s1|φ_i⟩|`.
pub fn sample_bound_check(dim: usize, trials: usize, seed: u64) -> Result<f64> {
    if dim == 0 || dim > BOUND_CHECK_DIM_CAP {
        return Err(Error::Usage(format!("bound check dimension must be in 1..={BOUND_CHECK_DIM_CAP}, got {dim}")));
    }
    let layout = PartyLayout::single(dim)?;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let mut rng = CounterRng::new(derive_seed(seed, trial as u64));
        let s1 = PureState::normalized(layout.clone(), rng.complex_gaussian_vec(dim))?;
        let s2 = PureState::normalized(layout.clone(), rng.complex_gaussian_vec(dim))?;
        let n_elements = if rng.uniform() < 0.5 { dim } else { 2 * dim };
        let povm = Povm::random(dim, n_elements, &mut rng)?;
        worst = worst.max(bound_violation(&s1, &s2, &povm)?);
    }
    Ok(worst)
}

/// `|⟨s1|s2⟩| − Σ_i |⟨φ_i|s2⟩⟨s1|φ_i⟩|`; never positive beyond roundoff.
pub fn bound_violation(s1: &PureState, s2: &PureState, povm: &Povm) -> Result<f64> {
    let ov = state_overlap(s1, s2)?.norm();
    Ok(ov - crate::measure::measurement_overlap_sum(s1, s2, povm)?)
}

/// Over `trials` seeded pairs, the largest `|Σ_i |⟨φ_i|s2⟩⟨s1|φ_i⟩| − |⟨s1|s2⟩||`
/// when the POVM is the equi-diagonal basis of the dyad.
pub fn sample_tightness_check(dim: usize, trials: usize, seed: u64) -> Result<f64> {
    if dim == 0 || dim > BOUND_CHECK_DIM_CAP {
        return Err(Error::Usage(format!("tightness check dimension must be in 1..={BOUND_CHECK_DIM_CAP}, got {dim}")));
    }
    let layout = PartyLayout::single(dim)?;
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let mut rng = CounterRng::new(derive_seed(seed, trial as u64));
        let s1 = PureState::normalized(layout.clone(), rng.complex_gaussian_vec(dim))?;
        let s2 = PureState::normalized(layout.clone(), rng.complex_gaussian_vec(dim))?;
        let eq = crate::measure::dyad_equidiag_basis(&s1, &s2, crate::defaults::TOL_EQUIDIAG)?;
        worst = worst.max(bound_violation(&s1, &s2, &Povm::from_basis(&eq.basis)?)?.abs());
    }
    Ok(worst)
}
