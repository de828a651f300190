use num_complex::Complex64;
use serde::Serialize;

use super::{EVOLVED_TRACE_TOL, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// A validated density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

/// Measured deviations of a matrix from the state invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StateCheck {
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl StateCheck {
    pub fn of(m: &CMatrix) -> Self {
        StateCheck {
            trace_error: (linalg::trace(m) - c(1.0)).norm(),
            hermiticity: linalg::hermiticity_defect(m),
            min_eigenvalue: linalg::min_eigenvalue(m),
        }
    }

    pub fn holds(&self, trace_tol: f64) -> bool {
        self.trace_error <= trace_tol && self.hermiticity <= HERMITIAN_TOL && self.min_eigenvalue >= -POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Validates `m` against the strict construction tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!("{}x{} density matrix", m.nrows(), m.ncols())));
        }
        let check = StateCheck::of(&m);
        if check.hermiticity > HERMITIAN_TOL {
            return Err(Error::NotHermitian(check.hermiticity));
        }
        if !check.holds(TRACE_TOL) {
            return Err(Error::Invariant(format!("{check:?}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Accepts the output of an evolution step. Eigenvalues in
    /// `(-1e-10, 0)` are clamped to zero and the trace restored; the flag
    /// reports whether that happened.
    pub fn settle(m: CMatrix) -> Result<(Self, bool)> {
        let hermiticity = linalg::hermiticity_defect(&m);
        if hermiticity > HERMITIAN_TOL {
            return Err(Error::NotHermitian(hermiticity));
        }
        let trace_error = (linalg::trace(&m) - c(1.0)).norm();
        if trace_error > EVOLVED_TRACE_TOL {
            return Err(Error::Invariant(format!("trace drifted by {trace_error:.3e}")));
        }
        let (values, vectors) = linalg::hermitian_eigen(&m);
        let lowest = values.first().copied().unwrap_or(0.0);
        if lowest < -POSITIVITY_TOL {
            return Err(Error::Invariant(format!("negative eigenvalue {lowest:.3e}")));
        }
        if lowest >= 0.0 {
            return Ok((DensityMatrix(m), false));
        }
        let clamped: Vec<f64> = values.iter().map(|&x| x.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let scaled: Vec<f64> = clamped.iter().map(|x| x / total).collect();
        Ok((DensityMatrix(linalg::from_eigen(&scaled, &vectors)), true))
    }

    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || amplitudes.is_empty() {
            return Err(Error::ZeroNorm);
        }
        let d = amplitudes.len();
        let m = CMatrix::from_fn(d, d, |r, s| amplitudes[r] * amplitudes[s].conj() / (norm * norm));
        Ok(DensityMatrix(linalg::hermitian_part(&m)))
    }

    /// `|k⟩⟨k|`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        DensityMatrix(linalg::unit(dim, k, k))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(linalg::identity(dim) * c(1.0 / dim as f64))
    }

    /// Diagonal state with the given (normalized) populations.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Domain("populations must be non-negative".into()));
        }
        let total: f64 = p.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let scaled: Vec<f64> = p.iter().map(|x| x / total).collect();
        Ok(DensityMatrix(linalg::from_real_diagonal(&scaled)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn check(&self) -> StateCheck {
        StateCheck::of(&self.0)
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.0).0
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_distance(&self.0, &other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_trace_and_hermiticity() {
        assert!(DensityMatrix::new(linalg::from_real_diagonal(&[0.5, 0.6])).is_err());
        let mut m = linalg::from_real_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn settle_clamps_tiny_negative_eigenvalues() {
        let m = linalg::from_real_diagonal(&[1.0 + 1e-12, -1e-12]);
        let (rho, clamped) = DensityMatrix::settle(m).unwrap();
        assert!(clamped);
        assert!(rho.check().min_eigenvalue >= 0.0);
        assert!(rho.check().trace_error < 1e-15);
        assert!(DensityMatrix::settle(linalg::from_real_diagonal(&[1.0 + 1e-9, -1e-9])).is_err());
    }

    #[test]
    fn pure_state_is_normalized() {
        let rho = DensityMatrix::pure(&[c(1.0), Complex64::new(0.0, 1.0)]).unwrap();
        assert!((rho.population(0) - 0.5).abs() < 1e-15);
        assert!(rho.check().holds(TRACE_TOL));
    }
}
