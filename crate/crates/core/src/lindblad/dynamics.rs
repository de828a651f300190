use serde::Serialize;

use super::state::DensityMatrix;
use super::HERMITIAN_TOL;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, I};

/// Singular values below this (relative) count as kernel directions.
const KERNEL_TOL: f64 = 1e-9;
/// Convergence threshold of the long-time channel.
const LIMIT_TOL: f64 = 1e-10;
/// Decay constants traversed before a limit is declared.
const LIMIT_HORIZON: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuperoperatorKind {
    Generator,
    Channel,
}

/// A linear map on `D×D` matrices, stored as a `D²×D²` matrix acting on
/// column-stacked vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    matrix: CMatrix,
    dim: usize,
    kind: SuperoperatorKind,
}

impl Superoperator {
    pub fn new(matrix: CMatrix, kind: SuperoperatorKind) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if matrix.ncols() != n || dim * dim != n {
            return Err(Error::Shape(format!(
                "{}x{} is not a superoperator shape",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Superoperator { matrix, dim, kind })
    }

    pub fn zero_generator(dim: usize) -> Self {
        Superoperator {
            matrix: CMatrix::zeros(dim * dim, dim * dim),
            dim,
            kind: SuperoperatorKind::Generator,
        }
    }

    pub fn identity_channel(dim: usize) -> Self {
        Superoperator {
            matrix: CMatrix::identity(dim * dim, dim * dim),
            dim,
            kind: SuperoperatorKind::Channel,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SuperoperatorKind {
        self.kind
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        linalg::unvectorize(&(&self.matrix * linalg::vectorize(x)), self.dim)
    }

    /// `exp(t L)` as a channel.
    pub fn exp(&self, t: f64) -> Result<Superoperator> {
        self.expect(SuperoperatorKind::Generator)?;
        Ok(Superoperator {
            matrix: linalg::expm(&(&self.matrix * c(t))),
            dim: self.dim,
            kind: SuperoperatorKind::Channel,
        })
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        self.same_dim(other)?;
        Ok(Superoperator {
            matrix: &self.matrix * &other.matrix,
            dim: self.dim,
            kind: SuperoperatorKind::Channel,
        })
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        self.same_dim(other)?;
        Ok(Superoperator {
            matrix: &self.matrix + &other.matrix,
            dim: self.dim,
            kind: self.kind,
        })
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Superoperator {
            matrix: &self.matrix * c(s),
            dim: self.dim,
            kind: self.kind,
        }
    }

    /// How far the map is from preserving (channel) or annihilating
    /// (generator) the trace.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..d * d {
            let mut s = c(0.0);
            for k in 0..d {
                s += self.matrix[(k + d * k, col)];
            }
            let target = match self.kind {
                SuperoperatorKind::Generator => c(0.0),
                SuperoperatorKind::Channel if col % (d + 1) == 0 => c(1.0),
                SuperoperatorKind::Channel => c(0.0),
            };
            worst = worst.max((s - target).norm());
        }
        worst
    }

    /// Eigenvalues of the superoperator matrix.
    pub fn spectrum(&self) -> Vec<num_complex::Complex64> {
        linalg::eigenvalues(&self.matrix)
    }

    /// Restriction to the block spanned by the basis vectors `subspace`:
    /// `R ∘ self ∘ E`, with `E` the embedding and `R` the compression.
    pub fn restrict(&self, subspace: &[usize]) -> Result<Superoperator> {
        let d = self.dim;
        if subspace.iter().any(|&k| k >= d) {
            return Err(Error::Shape("subspace index outside the Hilbert space".into()));
        }
        let r = subspace.len();
        let idx = |a: usize, b: usize| subspace[a] + d * subspace[b];
        let m = CMatrix::from_fn(r * r, r * r, |row, col| {
            self.matrix[(idx(row % r, row / r), idx(col % r, col / r))]
        });
        Superoperator::new(m, self.kind)
    }

    fn expect(&self, kind: SuperoperatorKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Shape(format!("expected a {kind:?}, got a {:?}", self.kind)));
        }
        Ok(())
    }

    fn same_dim(&self, other: &Superoperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("dimensions {} and {}", self.dim, other.dim)));
        }
        Ok(())
    }
}

/// `R ρ R† − ½{R†R, ρ}`.
pub fn dissipator(r: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    if r.shape() != rho.shape() || r.nrows() != r.ncols() {
        return Err(Error::Shape(format!("{:?} against {:?}", r.shape(), rho.shape())));
    }
    let rdr = r.adjoint() * r;
    Ok(r * rho * r.adjoint() - linalg::anticommutator(&rdr, rho) * c(0.5))
}

/// Superoperator of `ρ ↦ −i[H, ρ] + Σ rate·D_R[ρ]`.
pub fn generator(h: Option<&CMatrix>, dampers: &[(f64, CMatrix)]) -> Result<Superoperator> {
    let dim = match (h, dampers.first()) {
        (Some(h), _) => h.nrows(),
        (None, Some((_, r))) => r.nrows(),
        (None, None) => return Err(Error::Shape("generator needs H or a damper".into())),
    };
    let id = linalg::identity(dim);
    let mut l = CMatrix::zeros(dim * dim, dim * dim);
    if let Some(h) = h {
        if h.nrows() != h.ncols() {
            return Err(Error::Shape("Hamiltonian must be square".into()));
        }
        let defect = linalg::hermiticity_defect(h);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        l -= (linalg::sandwich(h, &id) - linalg::sandwich(&id, h)) * I;
    }
    for (rate, r) in dampers {
        if r.nrows() != dim || r.ncols() != dim {
            return Err(Error::Shape(format!("damper {:?} in dimension {dim}", r.shape())));
        }
        if !rate.is_finite() || *rate < 0.0 {
            return Err(Error::Domain(format!("damping rate {rate}")));
        }
        if *rate == 0.0 {
            continue;
        }
        let rdr = r.adjoint() * r;
        let term =
            linalg::sandwich(r, &r.adjoint()) - (linalg::sandwich(&rdr, &id) + linalg::sandwich(&id, &rdr)) * c(0.5);
        l += term * c(*rate);
    }
    Superoperator::new(l, SuperoperatorKind::Generator)
}

/// `exp(tL) ρ₀`, re-validated as a state.
pub fn evolve_continuous(l: &Superoperator, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("evolution time {t}")));
    }
    if rho0.dim() != l.dim() {
        return Err(Error::Shape("state and generator dimensions differ".into()));
    }
    let u = l.exp(t)?;
    Ok(DensityMatrix::settle(u.apply(rho0.matrix()))?.0)
}

/// Stationary states of a generator.
#[derive(Clone, Debug)]
pub struct SteadyStates {
    /// Dimension of the complex kernel of `L`.
    pub kernel_dim: usize,
    /// Linearly independent trace-one representatives, maximally mixed
    /// projection first.
    pub states: Vec<DensityMatrix>,
    /// Largest `max|Lρ|` over the representatives.
    pub residual: f64,
}

impl SteadyStates {
    pub fn unique(&self) -> Option<&DensityMatrix> {
        (self.kernel_dim == 1).then(|| &self.states[0])
    }
}

/// Kernel of a generator intersected with the state space.
pub fn steady_states(l: &Superoperator) -> Result<SteadyStates> {
    l.expect(SuperoperatorKind::Generator)?;
    let projector = kernel_projector(l)?;
    let kernel_dim = projector.rank;
    let d = l.dim();

    let mut candidates = vec![linalg::identity(d) * c(1.0 / d as f64)];
    candidates.extend((0..d).map(|k| linalg::unit(d, k, k)));
    for a in 0..d {
        for b in a + 1..d {
            for phase in [c(1.0), I] {
                let mut v = CVector::zeros(d);
                v[a] = c(1.0);
                v[b] = phase;
                candidates.push(&v * v.adjoint() * c(0.5));
            }
        }
    }

    let mut accepted: Vec<CVector> = Vec::new();
    let mut states = Vec::new();
    let mut residual: f64 = 0.0;
    for sigma in candidates {
        if states.len() == kernel_dim {
            break;
        }
        let image = &projector.matrix * linalg::vectorize(&sigma);
        let mut rest = image.clone();
        for q in &accepted {
            rest -= q * q.dotc(&image);
        }
        let norm = rest.norm();
        if norm <= 1e-8 * image.norm().max(1e-300) {
            continue;
        }
        accepted.push(rest / c(norm));
        let m = linalg::hermitian_part(&linalg::unvectorize(&image, d));
        let tr = linalg::trace(&m).re;
        if tr.abs() < 1e-12 {
            return Err(Error::DegenerateSteadyState("traceless kernel element".into()));
        }
        let (rho, _) = DensityMatrix::settle(m * c(1.0 / tr))?;
        residual = residual.max(linalg::max_abs(&l.apply(rho.matrix())));
        states.push(rho);
    }
    Ok(SteadyStates {
        kernel_dim,
        states,
        residual,
    })
}

struct KernelProjector {
    matrix: CMatrix,
    rank: usize,
}

/// Spectral projector `V (W†V)⁻¹ W†` onto the kernel of `L`, with `V`, `W`
/// the right and left null spaces.
fn kernel_projector(l: &Superoperator) -> Result<KernelProjector> {
    let (v, smin) = linalg::kernel(l.matrix(), KERNEL_TOL);
    if v.ncols() == 0 {
        return Err(Error::NoSteadyState(smin));
    }
    let (w, _) = linalg::kernel(&l.matrix().adjoint(), KERNEL_TOL);
    if w.ncols() != v.ncols() {
        return Err(Error::DegenerateSteadyState(format!(
            "right kernel {} and left kernel {} differ",
            v.ncols(),
            w.ncols()
        )));
    }
    let overlap = w.adjoint() * &v;
    let inv = overlap
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSteadyState("zero eigenvalue is not semisimple".into()))?;
    Ok(KernelProjector {
        matrix: &v * inv * w.adjoint(),
        rank: v.ncols(),
    })
}

/// `lim_{t→∞} exp(tL)`, taken at fifty slowest decay constants and checked
/// for convergence.
pub fn limit_channel(l: &Superoperator) -> Result<Superoperator> {
    l.expect(SuperoperatorKind::Generator)?;
    let spectrum = l.spectrum();
    let scale = spectrum.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let gap = spectrum
        .iter()
        .map(|z| z.re.abs())
        .filter(|&x| x > KERNEL_TOL * scale)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        if spectrum.iter().all(|z| z.norm() <= KERNEL_TOL * scale) {
            return Ok(Superoperator::identity_channel(l.dim()));
        }
        return Err(Error::Domain(
            "generator has no decaying modes and does not converge".into(),
        ));
    }
    let t = LIMIT_HORIZON / gap;
    let u = l.exp(t)?;
    let u2 = u.compose(&u)?;
    let drift = linalg::max_abs(&(u2.matrix() - u.matrix()));
    if drift > LIMIT_TOL {
        return Err(Error::Domain(format!(
            "long-time channel did not converge (drift {drift:.3e})"
        )));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower(d: usize, n: usize, m: usize) -> CMatrix {
        linalg::unit(d, n, m)
    }

    #[test]
    fn dissipator_examples() {
        let r = lower(2, 0, 1);
        let out = dissipator(&r, &linalg::unit(2, 1, 1)).unwrap();
        assert_eq!(out, linalg::from_real_diagonal(&[1.0, -1.0]));
        assert_eq!(dissipator(&r, &linalg::unit(2, 0, 0)).unwrap(), linalg::zeros(2));
        let out = dissipator(&r, &linalg::unit(2, 1, 0)).unwrap();
        assert_eq!(out, linalg::unit(2, 1, 0) * c(-0.5));
        assert!(dissipator(&r, &linalg::zeros(3)).is_err());
    }

    #[test]
    fn generator_matches_dissipator_on_matrix_units() {
        let r = CMatrix::from_fn(3, 3, |a, b| {
            num_complex::Complex64::new(a as f64 - b as f64, 0.2 * a as f64)
        });
        let l = generator(None, &[(0.7, r.clone())]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let e = linalg::unit(3, a, b);
                let want = dissipator(&r, &e).unwrap() * c(0.7);
                assert!(linalg::max_abs(&(l.apply(&e) - want)) < 1e-14);
            }
        }
        assert!(l.trace_defect() < 1e-14);
    }

    #[test]
    fn pure_hamiltonian_spectrum_is_imaginary() {
        let h = CMatrix::from_fn(3, 3, |a, b| {
            if a == b {
                c(a as f64)
            } else {
                num_complex::Complex64::new(0.3, if a < b { 0.1 } else { -0.1 })
            }
        });
        let l = generator(Some(&h), &[]).unwrap();
        assert!(l.spectrum().iter().all(|z| z.re.abs() < 1e-10));
        let bad = linalg::unit(2, 0, 1);
        assert!(matches!(generator(Some(&bad), &[]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn two_level_decay_closed_form() {
        let gamma = 0.8;
        let l = generator(None, &[(gamma, lower(2, 0, 1))]).unwrap();
        let rho0 = DensityMatrix::basis_state(2, 1);
        for t in [0.0, 0.3, 1.0, 4.0] {
            let rho = evolve_continuous(&l, &rho0, t).unwrap();
            assert!((rho.population(1) - (-gamma * t).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_generator_kernel_is_everything() {
        let ss = steady_states(&Superoperator::zero_generator(3)).unwrap();
        assert_eq!(ss.kernel_dim, 9);
        assert_eq!(ss.states.len(), 9);
        assert!(linalg::max_abs(&(ss.states[0].matrix() - linalg::identity(3) * c(1.0 / 3.0))) < 1e-14);
    }

    #[test]
    fn dephasing_kernel_is_diagonal() {
        let dampers: Vec<_> = (0..3).map(|k| (1.0, linalg::unit(3, k, k))).collect();
        let ss = steady_states(&generator(None, &dampers).unwrap()).unwrap();
        assert_eq!(ss.kernel_dim, 3);
        for rho in &ss.states {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        assert!(rho.matrix()[(a, b)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn limit_of_amplitude_damping_is_ground_state() {
        let l = generator(None, &[(1.3, lower(2, 0, 1))]).unwrap();
        let u = limit_channel(&l).unwrap();
        let out = u.apply(&linalg::unit(2, 1, 1));
        assert!(linalg::max_abs(&(out - linalg::unit(2, 0, 0))) < 1e-12);
        assert!(u.trace_defect() < 1e-12);
    }

    #[test]
    fn limit_of_unitary_flow_does_not_exist() {
        let h = linalg::from_real_diagonal(&[0.0, 1.0]);
        assert!(limit_channel(&generator(Some(&h), &[]).unwrap()).is_err());
    }

    #[test]
    fn restriction_picks_the_block() {
        let l = generator(None, &[(1.0, lower(3, 0, 2))]).unwrap();
        let r = l.restrict(&[0, 2]).unwrap();
        let direct = generator(None, &[(1.0, lower(2, 0, 1))]).unwrap();
        assert!(linalg::max_abs(&(r.matrix() - direct.matrix())) < 1e-15);
    }
}
