//! Unitary similarity to a constant diagonal.
//!
//! Every square complex matrix `M` is unitarily similar to one whose diagonal
//! entries all equal `τ = tr(M)/n`. The construction here works on
//! `B = M − τI`, whose diagonal has to be driven to zero:
//!
//! 1. If some 2×2 principal block of the active part of `B` has `0` in its
//!    numerical range, rotate inside that block so one diagonal entry becomes
//!    `0`, freeze that basis vector and drop it from the active set.
//! 2. Otherwise `0` lies in the convex hull of the active diagonal (the active
//!    trace is zero) and hence in some triangle `d_i, d_j, d_k`. Rotate `(i, j)`
//!    to move entry `i` to the point of segment `[d_i, d_j]` from which `0` is on
//!    the segment towards `d_k`, then rotate `(i, k)` to zero it, and freeze.
//!
//! Diagonal entries of a block always lie in its numerical range, which is
//! convex, so every rotation target is reachable. Each frozen vector costs at
//! most two rotations.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::linalg::{eigenvalues_2x2, identity, max_abs, trace, unitarity_defect};
use crate::{CMatrix, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Grid resolution per axis for the pair-rotation search.
const GRID: usize = 64;
/// Hard cap on Newton plus refinement iterations in one pair solve.
const MAX_REFINE_STEPS: usize = 200;
/// Slack on the ellipse test, relative to the block scale.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EquiDiagResult {
    /// Columns are the orthonormal basis vectors.
    pub basis: CMatrix,
    /// Common diagonal value `tr(M)/n`.
    pub tau: Complex64,
    /// `max_i |(basis† M basis)_ii − τ|`, recomputed from the returned basis.
    pub residual: f64,
    /// Absolute bound the residual was held to.
    pub tolerance: f64,
}

impl EquiDiagResult {
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.basis)
    }

    pub fn basis_vector(&self, k: usize) -> Vec<Complex64> {
        self.basis.column(k).iter().copied().collect()
    }
}

/// Scale used for relative tolerances: `max(1, max |M_ij|)`.
pub fn tolerance_scale(m: &CMatrix) -> f64 {
    max_abs(m).max(1.0)
}

/// `max_i |(U† M U)_ii − τ|`, computed directly.
pub fn diagonal_residual(m: &CMatrix, basis: &CMatrix, tau: Complex64) -> f64 {
    (0..basis.ncols())
        .map(|k| {
            let col = basis.column(k);
            let mc = m * col;
            let d: Complex64 = col.iter().zip(mc.iter()).map(|(a, b)| a.conj() * b).sum();
            (d - tau).norm()
        })
        .fold(0.0, f64::max)
}

/// Find an orthonormal basis in which every diagonal entry of `m` equals
/// `tr(m)/n`. `tol` is relative to [`tolerance_scale`].
pub fn equi_diagonalize(m: &CMatrix, tol: f64) -> Result<EquiDiagResult> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Dimension(format!("equi-diagonalization needs a square matrix, got {}x{}", n, m.ncols())));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    let scale = tolerance_scale(m);
    let tol_abs = tol * scale;
    let tau = trace(m) / n as f64;

    let mut b = m.clone();
    for i in 0..n {
        b[(i, i)] -= tau;
    }
    if (0..n).all(|i| b[(i, i)].norm() <= tol_abs) {
        return Ok(EquiDiagResult { basis: identity(n), tau, residual: diagonal_residual(m, &identity(n), tau), tolerance: tol_abs });
    }

    // Entries below this are frozen as already zero; far under tol_abs so the
    // drift they leave on the last active entry is negligible.
    let tiny = tol_abs * 1e-3;
    let mut basis = identity(n);
    let mut active: Vec<usize> = (0..n).collect();

    while active.len() > 1 {
        active.retain(|&i| b[(i, i)].norm() > tiny);
        if active.len() <= 1 {
            break;
        }
        if let Some((i, j, rot)) = find_zeroing_pair(&b, &active, tiny) {
            apply_rotation(&mut b, &mut basis, i, j, &rot);
            active.retain(|&k| k != i);
            continue;
        }
        let devs: Vec<Complex64> = active.iter().map(|&k| b[(k, k)]).collect();
        let triple = caratheodory_triple(&devs).ok_or_else(|| Error::Convergence {
            residual: diagonal_residual(m, &basis, tau),
            path: String::new(),
        })?;
        let (i, j, k) = (active[triple.i], active[triple.j], active[triple.k]);
        let [alpha, beta, _] = triple.weights;
        let p = (b[(i, i)] * alpha + b[(j, j)] * beta) / (alpha + beta);
        let first = solve_pair_rotation(&b, i, j, p, tol_abs)?;
        apply_rotation(&mut b, &mut basis, i, j, &first);
        let second = solve_pair_rotation(&b, i, k, ZERO, tol_abs)?;
        apply_rotation(&mut b, &mut basis, i, k, &second);
        active.retain(|&x| x != i);
    }

    let residual = diagonal_residual(m, &basis, tau);
    if residual > tol_abs {
        return Err(Error::Convergence { residual, path: String::new() });
    }
    Ok(EquiDiagResult { basis, tau, residual, tolerance: tol_abs })
}

/// Scan candidate pairs (those containing the largest active deviation
/// first, then the rest lexicographically) for one whose block reaches 0.
fn find_zeroing_pair(b: &CMatrix, active: &[usize], tiny: f64) -> Option<(usize, usize, PairRotation)> {
    let lead = *active
        .iter()
        .reduce(|best, k| if b[(*k, *k)].norm() > b[(*best, *best)].norm() { k } else { best })?;
    let mut candidates: Vec<(usize, usize)> = active.iter().filter(|&&j| j != lead).map(|&j| (lead, j)).collect();
    for (x, &p) in active.iter().enumerate() {
        for &q in &active[x + 1..] {
            if p != lead && q != lead {
                candidates.push((p, q));
            }
        }
    }
    for (i, j) in candidates {
        let block = principal_block(b, i, j);
        if !numerical_range_contains(&block, ZERO) {
            continue;
        }
        if let Ok(rot) = solve_pair_rotation(b, i, j, ZERO, tiny) {
            return Some((i, j, rot));
        }
    }
    None
}

fn principal_block(b: &CMatrix, i: usize, j: usize) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[b[(i, i)], b[(i, j)], b[(j, i)], b[(j, j)]])
}

/// Replace basis vectors `i, j` by `u` (slot `i`) and its complement (slot `j`).
fn apply_rotation(b: &mut CMatrix, basis: &mut CMatrix, i: usize, j: usize, rot: &PairRotation) {
    let (s, c) = rot.t.sin_cos();
    let e = Complex64::from_polar(1.0, rot.phi);
    // columns: u = (c, e s), v = (−conj(e) s, c)
    let g = [[Complex64::new(c, 0.0), -e.conj() * s], [e * s, Complex64::new(c, 0.0)]];
    let n = b.nrows();
    for r in 0..n {
        let (x, y) = (b[(r, i)], b[(r, j)]);
        b[(r, i)] = x * g[0][0] + y * g[1][0];
        b[(r, j)] = x * g[0][1] + y * g[1][1];
        let (x, y) = (basis[(r, i)], basis[(r, j)]);
        basis[(r, i)] = x * g[0][0] + y * g[1][0];
        basis[(r, j)] = x * g[0][1] + y * g[1][1];
    }
    for col in 0..n {
        let (x, y) = (b[(i, col)], b[(j, col)]);
        b[(i, col)] = g[0][0].conj() * x + g[1][0].conj() * y;
        b[(j, col)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
}

/// A unit vector `u = cos t · e_i + e^{iφ} sin t · e_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRotation {
    pub t: f64,
    pub phi: f64,
    /// `|u† B u − target|` at the returned angles.
    pub residual: f64,
}

impl PairRotation {
    /// Components of `u` on `(e_i, e_j)`.
    pub fn components(&self) -> (Complex64, Complex64) {
        let (s, c) = self.t.sin_cos();
        (Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi))
    }
}

struct PairForm {
    a: Complex64,
    d: Complex64,
    p: Complex64,
    q: Complex64,
    target: Complex64,
}

impl PairForm {
    fn residual(&self, t: f64, phi: f64) -> Complex64 {
        let (s, c) = t.sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        self.a * (c * c) + self.d * (s * s) + (e * self.p + e.conj() * self.q) * (s * c) - self.target
    }

    /// Partial derivatives in `t` and `φ`.
    fn gradient(&self, t: f64, phi: f64) -> (Complex64, Complex64) {
        let (s2, c2) = (2.0 * t).sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        let cross = e * self.p + e.conj() * self.q;
        let dt = (self.d - self.a) * s2 + cross * c2;
        let dphi = (e * self.p - e.conj() * self.q) * Complex64::new(0.0, 0.5 * s2);
        (dt, dphi)
    }
}

fn canonical_angles(t: f64, phi: f64) -> (f64, f64) {
    // t ↦ t + π flips the sign of u; t ↦ π − t with φ ↦ φ + π does too.
    let mut t = t.rem_euclid(PI);
    let mut phi = phi;
    if t > FRAC_PI_2 {
        t = PI - t;
        phi += PI;
    }
    (t, phi.rem_euclid(TAU))
}

/// Find `u` in `span{e_i, e_j}` with `u† B u = target`.
///
/// A 64×64 grid over `(t, φ) ∈ [0, π/2] × [0, 2π)` seeds a damped
/// Gauss–Newton iteration on the real and imaginary parts of the residual.
/// When Newton stalls the grid is refined around the best point and the
/// iteration restarts. The solver works towards roundoff level; it only
/// reports failure if the best residual is still above `tol`.
pub fn solve_pair_rotation(b: &CMatrix, i: usize, j: usize, target: Complex64, tol: f64) -> Result<PairRotation> {
    let n = b.nrows();
    if b.ncols() != n || i >= n || j >= n || i == j {
        return Err(Error::Usage(format!("invalid pair ({i}, {j}) for a {}x{} matrix", n, b.ncols())));
    }
    let form = PairForm { a: b[(i, i)], d: b[(j, j)], p: b[(i, j)], q: b[(j, i)], target };
    let block_scale = [form.a, form.d, form.p, form.q, target].iter().map(|z| z.norm()).fold(1e-300, f64::max);
    let floor = 8.0 * f64::EPSILON * block_scale;

    let mut best = (0.0, 0.0, f64::INFINITY);
    for ti in 0..GRID {
        let t = FRAC_PI_2 * ti as f64 / (GRID - 1) as f64;
        for pi in 0..GRID {
            let phi = TAU * pi as f64 / GRID as f64;
            let r = form.residual(t, phi).norm();
            if r < best.2 {
                best = (t, phi, r);
            }
        }
    }

    let mut window = (FRAC_PI_2 / (GRID - 1) as f64, TAU / GRID as f64);
    let mut steps = 0;
    while steps < MAX_REFINE_STEPS && best.2 > floor {
        let before = best.2;
        best = newton(&form, best, floor, &mut steps);
        if best.2 <= floor || steps >= MAX_REFINE_STEPS {
            break;
        }
        if best.2 < before * 0.5 {
            continue;
        }
        // stalled: refine an 8×8 grid on the cell around the best point
        let (t0, p0) = (best.0, best.1);
        for ti in 0..8 {
            let t = t0 + window.0 * (ti as f64 / 3.5 - 1.0);
            for pi in 0..8 {
                let phi = p0 + window.1 * (pi as f64 / 3.5 - 1.0);
                let r = form.residual(t, phi).norm();
                if r < best.2 {
                    best = (t, phi, r);
                }
            }
        }
        window = (window.0 * 0.25, window.1 * 0.25);
        steps += 1;
    }

    if best.2 > tol {
        return Err(Error::InfeasibleTarget { residual: best.2 });
    }
    let (t, phi) = canonical_angles(best.0, best.1);
    Ok(PairRotation { t, phi, residual: form.residual(t, phi).norm() })
}

/// Levenberg-damped Gauss–Newton from `start`; returns the best point seen.
fn newton(form: &PairForm, start: (f64, f64, f64), floor: f64, steps: &mut usize) -> (f64, f64, f64) {
    let (mut t, mut phi, mut r_norm) = start;
    let mut lambda = 1e-6;
    let mut fails = 0;
    while *steps < MAX_REFINE_STEPS && r_norm > floor && fails < 8 {
        *steps += 1;
        let r = form.residual(t, phi);
        let (dt, dphi) = form.gradient(t, phi);
        // J = [[dt.re, dphi.re], [dt.im, dphi.im]]
        let jtj00 = dt.norm_sqr();
        let jtj01 = dt.re * dphi.re + dt.im * dphi.im;
        let jtj11 = dphi.norm_sqr();
        let g0 = dt.re * r.re + dt.im * r.im;
        let g1 = dphi.re * r.re + dphi.im * r.im;
        let damp = lambda * (jtj00 + jtj11).max(1e-300);
        let a00 = jtj00 + damp;
        let a11 = jtj11 + damp;
        let det = a00 * a11 - jtj01 * jtj01;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let st = -(a11 * g0 - jtj01 * g1) / det;
        let sp = -(a00 * g1 - jtj01 * g0) / det;
        let (nt, np) = (t + st, phi + sp);
        let nr = form.residual(nt, np).norm();
        if nr < r_norm {
            t = nt;
            phi = np;
            r_norm = nr;
            lambda = (lambda * 0.1).max(1e-15);
            fails = 0;
        } else {
            lambda *= 10.0;
            fails += 1;
        }
    }
    (t, phi, r_norm)
}

/// Whether `z` lies in the numerical range of the 2×2 matrix `b2`.
///
/// The range is the closed elliptical disk with the eigenvalues as foci and
/// minor axis `sqrt(Σ|b_pq|² − |λ1|² − |λ2|²)`.
pub fn numerical_range_contains(b2: &CMatrix, z: Complex64) -> bool {
    assert_eq!(b2.shape(), (2, 2), "numerical_range_contains expects a 2x2 block");
    let (l1, l2) = eigenvalues_2x2(b2[(0, 0)], b2[(0, 1)], b2[(1, 0)], b2[(1, 1)]);
    let frob: f64 = b2.iter().map(|x| x.norm_sqr()).sum();
    let minor_sq = ((frob - l1.norm_sqr() - l2.norm_sqr()) / 4.0).max(0.0);
    let half_focal = (l1 - l2).norm() / 2.0;
    let major = (minor_sq + half_focal * half_focal).sqrt();
    let scale = b2.iter().map(|x| x.norm()).fold(z.norm(), f64::max).max(1.0);
    (z - l1).norm() + (z - l2).norm() <= 2.0 * major + RANGE_SLACK * scale
}

/// Indices and convex weights with `0 = α d_i + β d_j + γ d_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub weights: [f64; 3],
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Lexicographically first triple whose triangle contains the origin.
///
/// Degenerate (collinear) triangles use the minimum-norm weight vector when it
/// is non-negative, otherwise the two-point combination of the first pair
/// straddling the origin.
pub fn caratheodory_triple(devs: &[Complex64]) -> Option<Triple> {
    let n = devs.len();
    if n < 3 {
        return None;
    }
    let scale = devs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let slack = 1e-12;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let pts = [devs[i] / scale, devs[j] / scale, devs[k] / scale];
                if let Some(weights) = triangle_weights(pts, slack) {
                    return Some(Triple { i, j, k, weights });
                }
            }
        }
    }
    None
}

fn triangle_weights(pts: [Complex64; 3], slack: f64) -> Option<[f64; 3]> {
    let [x, y, z] = pts;
    let area = cross(y - x, z - x);
    if area.abs() > 1e-9 {
        let w = [cross(y, z) / area, cross(z, x) / area, cross(x, y) / area];
        if w.iter().any(|&v| v < -slack) {
            return None;
        }
        return Some(normalize_weights(w));
    }
    collinear_weights(pts, slack)
}

fn collinear_weights(pts: [Complex64; 3], slack: f64) -> Option<[f64; 3]> {
    let lead = pts.iter().copied().fold(ZERO, |acc, p| if p.norm() > acc.norm() { p } else { acc });
    if lead.norm() == 0.0 {
        return Some([1.0 / 3.0; 3]);
    }
    let dir = lead / lead.norm();
    if pts.iter().any(|p| (p * dir.conj()).im.abs() > slack.max(1e-9)) {
        return None;
    }
    let s: Vec<f64> = pts.iter().map(|p| (p * dir.conj()).re).collect();
    let ss: f64 = s.iter().map(|v| v * v).sum();
    let s1: f64 = s.iter().sum();
    // minimize |w|² subject to s·w = 0, 1·w = 1
    let det = ss * 3.0 - s1 * s1;
    if det.abs() > 1e-300 {
        let l1 = -s1 / det;
        let l2 = ss / det;
        let w = [l1 * s[0] + l2, l1 * s[1] + l2, l1 * s[2] + l2];
        if w.iter().all(|&v| v >= -slack) {
            return Some(normalize_weights(w));
        }
    }
    for a in 0..3 {
        for b in a + 1..3 {
            if s[a] * s[b] <= 0.0 && s[a] != s[b] {
                let mut w = [0.0; 3];
                w[a] = -s[b] / (s[a] - s[b]);
                w[b] = s[a] / (s[a] - s[b]);
                return Some(normalize_weights(w));
            }
        }
    }
    None
}

fn normalize_weights(w: [f64; 3]) -> [f64; 3] {
    let c = [w[0].max(0.0), w[1].max(0.0), w[2].max(0.0)];
    let total = c[0] + c[1] + c[2];
    [c[0] / total, c[1] / total, c[2] / total]
}
