//! Dense complex linear algebra shared by the open-system code.
//!
//! Density matrices are vectorized column by column, so `vec(A X B) =
//! (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|row⟩⟨col|` in dimension `n`.
pub fn unit(n: usize, row: usize, col: usize) -> CMatrix {
    let mut m = zeros(n);
    m[(row, col)] = c(1.0);
    m
}

pub fn from_real_diagonal(d: &[f64]) -> CMatrix {
    let mut m = zeros(d.len());
    for (k, &x) in d.iter().enumerate() {
        m[(k, k)] = c(x);
    }
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacked vectorization.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Superoperator matrix of `X ↦ A X B`.
pub fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |A - A†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Reassembles `V diag(values) V†`.
pub fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let d = from_real_diagonal(values);
    vectors * d * vectors.adjoint()
}

/// Applies `f` to the eigenvalues of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| f(x))));
    &vectors * d * vectors.adjoint()
}

/// Trace distance `½‖A − B‖₁` of Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigen(&(a - b)).0.iter().map(|x| x.abs()).sum::<f64>()
}

/// Matrix exponential (Padé approximant with scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    match m.clone().try_schur(1e-15, 0) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            t.diagonal().iter().copied().collect()
        }
        None => Vec::new(),
    }
}

/// Orthonormal basis (columns) of the numerical kernel of `m`, using the
/// singular values below `tol * max(1, σ_max)`. Also returns the smallest
/// singular value.
pub fn kernel(m: &CMatrix, tol: f64) -> (CMatrix, f64) {
    let n = m.ncols();
    if n == 0 {
        return (CMatrix::zeros(0, 0), 0.0);
    }
    let svd = m
        .clone()
        .try_svd(false, true, 1e-15, 0)
        .expect("svd with unlimited iterations converges");
    let v_t = svd.v_t.expect("requested v_t");
    let sigma = svd.singular_values;
    let sigma_max = sigma.max();
    let cut = tol * sigma_max.max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&k| sigma[k] <= cut).collect();
    // rows of Vᴴ are conjugated right singular vectors
    let basis = CMatrix::from_fn(n, keep.len(), |r, col| v_t[(keep[col], r)].conj());
    (basis, sigma.min())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_matches_direct_product() {
        let a = CMatrix::from_fn(3, 3, |r, c_| Complex64::new(r as f64 + 1.0, c_ as f64 - 0.5));
        let b = CMatrix::from_fn(3, 3, |r, c_| Complex64::new((r * c_) as f64, 1.0));
        let x = CMatrix::from_fn(3, 3, |r, c_| Complex64::new(r as f64 - c_ as f64, 0.3));
        let direct = &a * &x * &b;
        let via = unvectorize(&(sandwich(&a, &b) * vectorize(&x)), 3);
        assert!(max_abs(&(direct - via)) < 1e-12);
    }

    #[test]
    fn expm_of_diagonal() {
        let m = from_real_diagonal(&[0.0, -1.0, 2.0]);
        let e = expm(&m);
        assert!((e[(1, 1)].re - (-1f64).exp()).abs() < 1e-14);
        assert!((e[(2, 2)].re - 2f64.exp()).abs() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn schur_eigenvalues_of_rotation() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        let mut ev: Vec<f64> = eigenvalues(&m).iter().map(|z| z.im).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_projector() {
        let p = from_real_diagonal(&[1.0, 0.0, 1.0]);
        let (k, smin) = kernel(&p, 1e-10);
        assert_eq!(k.ncols(), 1);
        assert!(k[(1, 0)].norm() > 1.0 - 1e-12);
        assert!(smin < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = unit(2, 0, 0);
        let b = unit(2, 1, 1);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    }
}
