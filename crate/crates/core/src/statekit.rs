//! Multipartite layouts, pure states and dyads.
//!
//! Amplitudes are stored flat in mixed-radix order with party 0 most
//! significant. A [`Dyad`] `|ket⟩⟨bra|` is kept as its two vectors; the only
//! place a matrix appears is the output of [`partial_trace_dyad`].

use num_complex::Complex64;

use crate::defaults::TOL_NORM;
use crate::rng::{derive_seed, CounterRng};
use crate::{CMatrix, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartyLayout {
    dims: Vec<usize>,
}

impl PartyLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Usage("layout needs at least one party".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Usage(format!("party dimensions must be positive, got {dims:?}")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Usage("total dimension overflows".into()))?;
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat index of a per-party digit tuple.
    pub fn flatten(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (slot, &d) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }

    /// Layout with one party removed.
    pub fn without(&self, party: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.remove(party);
        Self::new(dims)
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.dims.len() {
            return Err(Error::Usage(format!(
                "party index {party} out of range for {} parties",
                self.dims.len()
            )));
        }
        Ok(())
    }
}

/// A normalized state vector over a [`PartyLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: PartyLayout,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Validates length and finiteness. A norm within [`TOL_NORM`] of 1 is
    /// silently renormalized; anything further off is rejected.
    pub fn new(layout: PartyLayout, amps: Vec<Complex64>) -> Result<Self> {
        let norm = checked_norm(&layout, &amps)?;
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::NotNormalized { norm, tol: TOL_NORM });
        }
        // A norm at roundoff distance from 1 is left alone so that written
        // and re-read states keep their exact amplitudes.
        if (norm - 1.0).abs() <= 8.0 * f64::EPSILON {
            return Ok(Self { layout, amps });
        }
        Ok(Self::rescaled(layout, amps, norm))
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(layout: PartyLayout, amps: Vec<Complex64>) -> Result<Self> {
        let norm = checked_norm(&layout, &amps)?;
        if norm == 0.0 {
            return Err(Error::Usage("cannot normalize the zero vector".into()));
        }
        Ok(Self::rescaled(layout, amps, norm))
    }

    fn rescaled(layout: PartyLayout, mut amps: Vec<Complex64>, norm: f64) -> Self {
        if norm != 1.0 {
            amps.iter_mut().for_each(|a| *a /= norm);
        }
        Self { layout, amps }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(layout: PartyLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::Usage(format!("basis index {index} out of range {n}")));
        }
        let mut amps = vec![ZERO; n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// The same state with every amplitude multiplied by `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self { layout: self.layout.clone(), amps: self.amps.iter().map(|a| a * phase).collect() }
    }
}

fn checked_norm(layout: &PartyLayout, amps: &[Complex64]) -> Result<f64> {
    if amps.len() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "{} amplitudes for layout {:?} (total dimension {})",
            amps.len(),
            layout.dims(),
            layout.total_dim()
        )));
    }
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NonFinite("state amplitudes"));
    }
    Ok(amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
}

/// `|ket⟩⟨bra|` on a layout. Neither vector needs to be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyad {
    ket: Vec<Complex64>,
    bra: Vec<Complex64>,
    layout: PartyLayout,
}

impl Dyad {
    pub fn new(ket: Vec<Complex64>, bra: Vec<Complex64>, layout: PartyLayout) -> Result<Self> {
        let n = layout.total_dim();
        if ket.len() != n || bra.len() != n {
            return Err(Error::Dimension(format!(
                "dyad vectors of length {} and {} for total dimension {n}",
                ket.len(),
                bra.len()
            )));
        }
        Ok(Self { ket, bra, layout })
    }

    /// `|s2⟩⟨s1|`.
    pub fn from_states(s1: &PureState, s2: &PureState) -> Result<Self> {
        if s1.layout() != s2.layout() {
            return Err(Error::Dimension(format!(
                "layouts differ: {:?} vs {:?}",
                s1.layout().dims(),
                s2.layout().dims()
            )));
        }
        Self::new(s2.amps().to_vec(), s1.amps().to_vec(), s1.layout().clone())
    }

    pub fn ket(&self) -> &[Complex64] {
        &self.ket
    }

    pub fn bra(&self) -> &[Complex64] {
        &self.bra
    }

    pub fn layout(&self) -> &PartyLayout {
        &self.layout
    }

    /// Full trace `⟨bra|ket⟩`.
    pub fn trace(&self) -> Complex64 {
        dot(&self.bra, &self.ket)
    }

    /// Dense `|ket⟩⟨bra|`. Quadratic memory; callers cap the dimension.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.ket.len();
        CMatrix::from_fn(n, n, |r, c| self.ket[r] * self.bra[c].conj())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

/// `Σ_i conj(a_i) b_i`, accumulated in ascending index order.
pub fn inner_product(a: &[Complex64], b: &[Complex64]) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("inner product of lengths {} and {}", a.len(), b.len())));
    }
    Ok(dot(a, b))
}

pub fn state_overlap(s1: &PureState, s2: &PureState) -> Result<Complex64> {
    if s1.layout() != s2.layout() {
        return Err(Error::Dimension(format!(
            "layouts differ: {:?} vs {:?}",
            s1.layout().dims(),
            s2.layout().dims()
        )));
    }
    inner_product(s1.amps(), s2.amps())
}

/// Reduce `d` to the parties in `keep` by tracing out the rest.
///
/// The result is indexed by the kept parties in ascending party order, first
/// kept party most significant: `M[r, c] = Σ_t ket[(r, t)] · conj(bra[(c, t)])`.
pub fn partial_trace_dyad(d: &Dyad, keep: &[usize]) -> Result<CMatrix> {
    if keep.is_empty() {
        return Err(Error::Usage("partial trace needs at least one kept party".into()));
    }
    let layout = d.layout();
    for &p in keep {
        layout.check_party(p)?;
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..layout.parties()).filter(|p| !kept.contains(p)).collect();

    let kept_dims: Vec<usize> = kept.iter().map(|&p| layout.dim(p)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&p| layout.dim(p)).collect();
    let kept_total: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    // index[t * kept_total + r] = flat index of (r, t)
    let mut index = vec![0usize; kept_total * traced_total];
    for (flat, digits) in (0..layout.total_dim()).map(|i| (i, layout.unflatten(i))) {
        let r = kept.iter().fold(0, |acc, &p| acc * layout.dim(p) + digits[p]);
        let t = traced.iter().fold(0, |acc, &p| acc * layout.dim(p) + digits[p]);
        index[t * kept_total + r] = flat;
    }

    let mut m = CMatrix::zeros(kept_total, kept_total);
    for t in 0..traced_total {
        let slice = &index[t * kept_total..(t + 1) * kept_total];
        for c in 0..kept_total {
            let b = d.bra[slice[c]].conj();
            if b == ZERO {
                continue;
            }
            for r in 0..kept_total {
                m[(r, c)] += d.ket[slice[r]] * b;
            }
        }
    }
    Ok(m)
}

/// Attach the outcome `⟨outcome|` on `party` to both sides of the dyad.
pub fn condition_dyad(d: &Dyad, party: usize, outcome: &[Complex64]) -> Result<Dyad> {
    let layout = d.layout();
    layout.check_party(party)?;
    if layout.parties() < 2 {
        return Err(Error::Usage(
            "conditioning a single-party dyad leaves a scalar; contract it directly".into(),
        ));
    }
    let dp = layout.dim(party);
    if outcome.len() != dp {
        return Err(Error::Dimension(format!("outcome of length {} for party of dimension {dp}", outcome.len())));
    }
    let rest = layout.without(party)?;
    let inner: usize = layout.dims()[party + 1..].iter().product();
    let n_rest = rest.total_dim();
    let mut ket = vec![ZERO; n_rest];
    let mut bra = vec![ZERO; n_rest];
    for (j, (k_out, b_out)) in ket.iter_mut().zip(bra.iter_mut()).enumerate() {
        let hi = j / inner;
        let lo = j % inner;
        for (x, o) in outcome.iter().enumerate() {
            let flat = (hi * dp + x) * inner + lo;
            let w = o.conj();
            *k_out += w * d.ket[flat];
            *b_out += w * d.bra[flat];
        }
    }
    Dyad::new(ket, bra, rest)
}

/// Haar-random normalized state, reproducible from `seed`.
pub fn random_pure_state(layout: &PartyLayout, seed: u64) -> PureState {
    let mut rng = CounterRng::new(seed);
    let amps = rng.complex_gaussian_vec(layout.total_dim());
    // A Gaussian vector is zero with probability 0; the draw is never all-zero
    // in practice, but fall back to |0⟩ rather than panic.
    PureState::normalized(layout.clone(), amps)
        .unwrap_or_else(|_| PureState::basis(layout.clone(), 0).expect("index 0 exists"))
}

/// Two independent Haar-random states derived from one seed.
pub fn random_state_pair(layout: &PartyLayout, seed: u64) -> (PureState, PureState) {
    (
        random_pure_state(layout, derive_seed(seed, 1)),
        random_pure_state(layout, derive_seed(seed, 2)),
    )
}

/// A random pair with the second state Gram–Schmidt orthogonalized against
/// the first.
pub fn random_orthogonal_pair(layout: &PartyLayout, seed: u64) -> (PureState, PureState) {
    let (s1, s2) = random_state_pair(layout, seed);
    let ov = dot(s1.amps(), s2.amps());
    let mut v: Vec<Complex64> = s2.amps().iter().zip(s1.amps()).map(|(b, a)| b - ov * a).collect();
    // second pass tightens the overlap to roundoff
    let ov2 = dot(s1.amps(), &v);
    v.iter_mut().zip(s1.amps()).for_each(|(b, a)| *b -= ov2 * a);
    let s2 = PureState::normalized(layout.clone(), v).expect("orthogonal component of a generic draw is nonzero");
    (s1, s2)
}

/// Kronecker product of single-party vectors, first factor most significant.
pub fn kron_vectors(factors: &[Vec<Complex64>]) -> Vec<Complex64> {
    factors.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, f| {
        acc.iter().flat_map(|a| f.iter().map(move |b| a * b)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> PureState {
        let l = PartyLayout::new(vec![2, 2]).unwrap();
        PureState::new(l, vec![c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    fn zz() -> PureState {
        PureState::basis(PartyLayout::new(vec![2, 2]).unwrap(), 0).unwrap()
    }

    /// Naive oracle: full D×D matrix of the dyad, then dense index sums.
    fn dense_partial_trace(d: &Dyad, keep: &[usize]) -> CMatrix {
        let layout = d.layout();
        let full = d.to_matrix();
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        let kd: usize = kept.iter().map(|&p| layout.dim(p)).product();
        let mut m = CMatrix::zeros(kd, kd);
        for i in 0..layout.total_dim() {
            for j in 0..layout.total_dim() {
                let di = layout.unflatten(i);
                let dj = layout.unflatten(j);
                let same_traced = (0..layout.parties()).filter(|p| !kept.contains(p)).all(|p| di[p] == dj[p]);
                if !same_traced {
                    continue;
                }
                let r = kept.iter().fold(0, |acc, &p| acc * layout.dim(p) + di[p]);
                let cc = kept.iter().fold(0, |acc, &p| acc * layout.dim(p) + dj[p]);
                m[(r, cc)] += full[(i, j)];
            }
        }
        m
    }

    #[test]
    fn layout_validation() {
        assert!(PartyLayout::new(vec![]).is_err());
        assert!(PartyLayout::new(vec![2, 0]).is_err());
        let l = PartyLayout::new(vec![2, 3, 4]).unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.flatten(&[1, 2, 3]), 23);
        assert_eq!(l.unflatten(7), vec![0, 1, 3]);
    }

    #[test]
    fn state_normalization_rules() {
        let l = PartyLayout::single(2).unwrap();
        assert!(PureState::new(l.clone(), vec![c(1.0 + 5e-11, 0.0), ZERO]).is_ok());
        assert!(matches!(
            PureState::new(l.clone(), vec![c(1.0 + 1e-9, 0.0), ZERO]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(PureState::new(l.clone(), vec![c(1.0, 0.0)]), Err(Error::Dimension(_))));
        assert!(matches!(PureState::new(l, vec![c(f64::NAN, 0.0), ZERO]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn inner_product_examples() {
        let s = random_pure_state(&PartyLayout::new(vec![3, 2]).unwrap(), 4);
        let ip = inner_product(s.amps(), s.amps()).unwrap();
        assert!((ip - c(1.0, 0.0)).norm() < 1e-14);
        let ov = state_overlap(&zz(), &bell()).unwrap();
        assert!((ov.re - FRAC_1_SQRT_2).abs() < 1e-15 && ov.im == 0.0);
        assert!(inner_product(&[ZERO], &[ZERO, ZERO]).is_err());
    }

    #[test]
    fn inner_product_matches_reverse_order_loop() {
        let l = PartyLayout::new(vec![4, 5]).unwrap();
        for seed in 0..20 {
            let (a, b) = random_state_pair(&l, seed);
            let mut oracle = ZERO;
            for i in (0..l.total_dim()).rev() {
                oracle += a.amps()[i].conj() * b.amps()[i];
            }
            assert!((inner_product(a.amps(), b.amps()).unwrap() - oracle).norm() <= 1e-14);
        }
    }

    #[test]
    fn partial_trace_bell_against_zero_zero() {
        let d = Dyad::from_states(&zz(), &bell()).unwrap();
        let m = partial_trace_dyad(&d, &[0]).unwrap();
        let expected = dense_partial_trace(&d, &[0]);
        assert!((m[(0, 0)] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(m[(0, 1)].norm() + m[(1, 0)].norm() + m[(1, 1)].norm() < 1e-15);
        assert!(crate::linalg::max_abs(&(m - expected)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_dyad_factorizes() {
        let la = PartyLayout::single(3).unwrap();
        let lb = PartyLayout::single(2).unwrap();
        let u = random_pure_state(&la, 1);
        let up = random_pure_state(&la, 2);
        let v = random_pure_state(&lb, 3);
        let vp = random_pure_state(&lb, 4);
        let ket = kron_vectors(&[u.amps().to_vec(), v.amps().to_vec()]);
        let bra = kron_vectors(&[up.amps().to_vec(), vp.amps().to_vec()]);
        let d = Dyad::new(ket, bra, PartyLayout::new(vec![3, 2]).unwrap()).unwrap();
        let m = partial_trace_dyad(&d, &[0]).unwrap();
        let w = inner_product(vp.amps(), v.amps()).unwrap();
        for r in 0..3 {
            for cc in 0..3 {
                let expected = w * u.amps()[r] * up.amps()[cc].conj();
                assert!((m[(r, cc)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_trace_identity_and_dense_oracle() {
        let l = PartyLayout::new(vec![2, 3, 2]).unwrap();
        let keeps: [&[usize]; 7] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];
        for seed in 0..50 {
            let (s1, s2) = random_state_pair(&l, seed);
            let d = Dyad::from_states(&s1, &s2).unwrap();
            let ov = state_overlap(&s1, &s2).unwrap();
            let keep = keeps[seed as usize % keeps.len()];
            let m = partial_trace_dyad(&d, keep).unwrap();
            assert!((crate::linalg::trace(&m) - ov).norm() <= 1e-12);
            assert!(crate::linalg::max_abs(&(m - dense_partial_trace(&d, keep))) <= 1e-14);
        }
    }

    #[test]
    fn partial_trace_usage_errors() {
        let d = Dyad::from_states(&zz(), &bell()).unwrap();
        assert!(matches!(partial_trace_dyad(&d, &[]), Err(Error::Usage(_))));
        assert!(matches!(partial_trace_dyad(&d, &[2]), Err(Error::Usage(_))));
    }

    #[test]
    fn condition_bell_dyad_on_plus_outcome() {
        let d = Dyad::from_states(&zz(), &bell()).unwrap();
        let plus = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
        let out = condition_dyad(&d, 0, &plus).unwrap();
        assert_eq!(out.layout().dims(), &[2]);
        assert!((out.ket()[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((out.ket()[1] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((out.bra()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(out.bra()[1].norm() < 1e-15);
    }

    #[test]
    fn condition_on_orthogonal_outcome_gives_zero_ket() {
        let l = PartyLayout::new(vec![2, 2]).unwrap();
        let ket = PureState::basis(l.clone(), 1).unwrap(); // |01⟩
        let d = Dyad::from_states(&zz(), &ket).unwrap();
        let out = condition_dyad(&d, 0, &[ZERO, c(1.0, 0.0)]).unwrap();
        assert!(out.ket().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn sequential_conditioning_recovers_entries() {
        let l = PartyLayout::new(vec![2, 3, 2]).unwrap();
        let (s1, s2) = random_state_pair(&l, 77);
        let d = Dyad::from_states(&s1, &s2).unwrap();
        let full = d.to_matrix();
        let e = |n: usize, k: usize| -> Vec<Complex64> { (0..n).map(|i| if i == k { c(1.0, 0.0) } else { ZERO }).collect() };
        for i in 0..l.total_dim() {
            let digits = l.unflatten(i);
            let mut cur = condition_dyad(&d, 0, &e(2, digits[0])).unwrap();
            cur = condition_dyad(&cur, 0, &e(3, digits[1])).unwrap();
            let k = cur.ket()[digits[2]];
            let b = cur.bra()[digits[2]];
            assert!((k * b.conj() - full[(i, i)]).norm() < 1e-15);
        }
    }

    #[test]
    fn conditioning_errors() {
        let l = PartyLayout::single(2).unwrap();
        let s = PureState::basis(l, 0).unwrap();
        let d = Dyad::from_states(&s, &s).unwrap();
        assert!(matches!(condition_dyad(&d, 0, &[c(1.0, 0.0), ZERO]), Err(Error::Usage(_))));
        let d2 = Dyad::from_states(&zz(), &bell()).unwrap();
        assert!(matches!(condition_dyad(&d2, 0, &[c(1.0, 0.0)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn conditioning_completeness_over_a_basis() {
        let l = PartyLayout::new(vec![3, 2, 2]).unwrap();
        let mut rng = CounterRng::new(8);
        for seed in 0..10 {
            let (s1, s2) = random_state_pair(&l, seed);
            let d = Dyad::from_states(&s1, &s2).unwrap();
            let u = rng.haar_unitary(3);
            let direct = partial_trace_dyad(&d, &[1]).unwrap();
            let mut summed = CMatrix::zeros(2, 2);
            for j in 0..3 {
                let e: Vec<Complex64> = u.column(j).iter().copied().collect();
                let cd = condition_dyad(&d, 0, &e).unwrap();
                summed += partial_trace_dyad(&cd, &[0]).unwrap();
            }
            assert!(crate::linalg::max_abs(&(summed - direct)) <= 1e-12);
        }
    }

    #[test]
    fn random_state_reproducible_and_normalized() {
        let l = PartyLayout::new(vec![3, 3]).unwrap();
        let a = random_pure_state(&l, 123);
        let b = random_pure_state(&l, 123);
        assert_eq!(a.amps(), b.amps());
        let n: f64 = a.amps().iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_first_moment() {
        let l = PartyLayout::single(4).unwrap();
        let mean = (0..10_000u64).map(|s| random_pure_state(&l, s).amps()[0].norm_sqr()).sum::<f64>() / 1e4;
        assert!((mean - 0.25).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn orthogonal_pair_is_orthogonal() {
        let l = PartyLayout::new(vec![3, 3]).unwrap();
        let (a, b) = random_orthogonal_pair(&l, 5);
        assert!(state_overlap(&a, &b).unwrap().norm() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mixed_radix_round_trip(dims in proptest::collection::vec(1usize..5, 1..5), pick in 0usize..10_000) {
                let l = PartyLayout::new(dims).unwrap();
                let i = pick % l.total_dim();
                prop_assert_eq!(l.flatten(&l.unflatten(i)), i);
            }

            #[test]
            fn trace_identity_any_keep(seed in 0u64..1_000, mask in 1u32..8) {
                let l = PartyLayout::new(vec![2, 3, 2]).unwrap();
                let (s1, s2) = random_state_pair(&l, seed);
                let d = Dyad::from_states(&s1, &s2).unwrap();
                let keep: Vec<usize> = (0..3).filter(|p| mask & (1 << p) != 0).collect();
                let m = partial_trace_dyad(&d, &keep).unwrap();
                let ov = state_overlap(&s1, &s2).unwrap();
                prop_assert!((crate::linalg::trace(&m) - ov).norm() <= 1e-12);
            }
        }
    }
}
