//! Small dense linear-algebra helpers shared by the numerical modules.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::CMatrix;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |U†U − I|` over entries.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - target).norm());
        }
    }
    worst
}

/// `max |M − M†|` over entries.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass, in place.
/// Columns that collapse numerically are replaced by the first standard basis
/// vector that survives projection.
pub fn orthonormalize_columns(m: &mut CMatrix) {
    let (rows, cols) = m.shape();
    for j in 0..cols {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: Complex64 = (0..rows).map(|r| m[(r, k)].conj() * m[(r, j)]).sum();
                for r in 0..rows {
                    let v = m[(r, k)];
                    m[(r, j)] -= proj * v;
                }
            }
        }
        let mut norm = (0..rows).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            for e in 0..rows {
                for r in 0..rows {
                    m[(r, j)] = if r == e { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                }
                for _pass in 0..2 {
                    for k in 0..j {
                        let proj: Complex64 = (0..rows).map(|r| m[(r, k)].conj() * m[(r, j)]).sum();
                        for r in 0..rows {
                            let v = m[(r, k)];
                            m[(r, j)] -= proj * v;
                        }
                    }
                }
                norm = (0..rows).map(|r| m[(r, j)].norm_sqr()).sum::<f64>().sqrt();
                if norm > 0.5 {
                    break;
                }
            }
        }
        for r in 0..rows {
            m[(r, j)] /= norm;
        }
    }
}

/// Hermitian eigendecomposition with a fixed convention: eigenvalues
/// ascending, and each eigenvector scaled so that its largest-magnitude
/// component (first one on ties) is real and positive.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for r in 1..n {
            if col[r].norm() > col[pivot].norm() * (1.0 + 1e-12) {
                pivot = r;
            }
        }
        let phase = if col[pivot].norm() > 0.0 { col[pivot].conj() / col[pivot].norm() } else { Complex64::new(1.0, 0.0) };
        for r in 0..n {
            vectors[(r, dst)] = col[r] * phase;
        }
    }
    (values, vectors)
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigh(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Eigenvalues of a 2×2 matrix via the characteristic polynomial, ordered so
/// the one from `mean + root` comes first.
pub fn eigenvalues_2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let root = (half_diff * half_diff + b * c).sqrt();
    (mean + root, mean - root)
}

/// Matrix exponential by scaling and squaring with a fixed 12-term Taylor
/// series. The argument is scaled until its 1-norm is at most 1/2.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|c| (0..n).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm1 * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=12 {
        term = (&term * &x).unscale(k as f64);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
