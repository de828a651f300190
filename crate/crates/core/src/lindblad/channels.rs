use nalgebra::DMatrix;

use super::dynamics::{generator, Superoperator, SuperoperatorKind};
use super::KRAUS_TOL;
use crate::amplitudes::{KappaMatrix, Normalization};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Choi eigenvalues below this are dropped.
const CHOI_DROP: f64 = 1e-12;
/// Choi eigenvalues below minus this reject the map.
const CHOI_NEGATIVE: f64 = 1e-8;
/// Allowed probability leakage out of an invariant subspace.
const LEAKAGE_TOL: f64 = 1e-10;

/// Kraus operators `M_μ` with `Σ M_μ†M_μ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::Shape("empty Kraus set".into()))?;
        let d = first.nrows();
        if ops.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape("Kraus operators must share one square shape".into()));
        }
        let set = KrausSet { ops };
        let defect = set.completeness_defect();
        if defect > KRAUS_TOL {
            return Err(Error::NotTracePreserving(defect));
        }
        Ok(set)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    /// `max|Σ M†M − 1|`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.ops[0].nrows();
        let sum = self.ops.iter().fold(linalg::zeros(d), |acc, m| acc + m.adjoint() * m);
        linalg::max_abs(&(sum - linalg::identity(d)))
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(linalg::zeros(rho.nrows()), |acc, m| acc + m * rho * m.adjoint())
    }

    pub fn to_channel(&self) -> Superoperator {
        let d = self.dim();
        let m = self.ops.iter().fold(CMatrix::zeros(d * d, d * d), |acc, k| {
            acc + linalg::sandwich(k, &k.adjoint())
        });
        Superoperator::new(m, SuperoperatorKind::Channel).expect("square by construction")
    }
}

/// Kraus form of a channel from the eigen-decomposition of its Choi matrix.
pub fn kraus_from_map(u0: &Superoperator) -> Result<KrausSet> {
    let d = u0.dim();
    let defect = u0.trace_defect();
    if u0.kind() != SuperoperatorKind::Channel || defect > 1e-9 {
        return Err(Error::NotTracePreserving(defect));
    }
    let u = u0.matrix();
    // Choi[(i,a),(j,b)] = ⟨a| U(|i⟩⟨j|) |b⟩
    let choi = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        u[(a + d * b, i + d * j)]
    });
    let asym = linalg::hermiticity_defect(&choi);
    if asym > CHOI_NEGATIVE {
        return Err(Error::NotCompletelyPositive(-asym));
    }
    let (values, vectors) = linalg::hermitian_eigen(&choi);
    if let Some(&lowest) = values.first() {
        if lowest < -CHOI_NEGATIVE {
            return Err(Error::NotCompletelyPositive(lowest));
        }
    }
    let ops: Vec<CMatrix> = values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &lam)| lam > CHOI_DROP)
        .map(|(k, &lam)| {
            let s = lam.sqrt();
            CMatrix::from_fn(d, d, |a, i| vectors[(i * d + a, k)] * c(s))
        })
        .collect();
    KrausSet::new(ops)
}

/// Rates `κ_nm = Σ_μ |M_μ,nm|²` on the invariant subspace `h0` and the
/// generator `Σ κ_nm D_{|n⟩⟨m|}` on it.
pub fn adiabatic_eliminate(kraus: &KrausSet, h0: &[usize]) -> Result<(KappaMatrix, Superoperator)> {
    let d = kraus.dim();
    check_subspace(d, h0)?;
    let outside: Vec<usize> = (0..d).filter(|x| !h0.contains(x)).collect();
    let leakage = h0
        .iter()
        .map(|&m| {
            kraus
                .ops()
                .iter()
                .map(|op| outside.iter().map(|&x| op[(x, m)].norm_sqr()).sum::<f64>())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if leakage > LEAKAGE_TOL {
        return Err(Error::NotInvariant(leakage));
    }
    let r = h0.len();
    let entries = DMatrix::from_fn(r, r, |n, m| {
        kraus.ops().iter().map(|op| op[(h0[n], h0[m])].norm_sqr()).sum::<f64>()
    });
    let kappa = KappaMatrix::new(entries, Normalization::OverN)?;
    let l = effective_generator(&kappa)?;
    Ok((kappa, l))
}

/// `Σ κ_nm D_{|n⟩⟨m|}`.
pub fn effective_generator(kappa: &KappaMatrix) -> Result<Superoperator> {
    let d = kappa.dim();
    let mut dampers = Vec::new();
    for m in 0..d {
        for n in 0..d {
            let rate = kappa.entries[(n, m)];
            if rate > 0.0 {
                dampers.push((rate, linalg::unit(d, n, m)));
            }
        }
    }
    if dampers.is_empty() {
        return Ok(Superoperator::zero_generator(d));
    }
    generator(None, &dampers)
}

/// First-order slow generator `U₀ ∘ L₁` compressed to the block `h0`, where
/// `U₀` is the channel of `kraus`.
pub fn first_order_generator(kraus: &KrausSet, l1: &Superoperator, h0: &[usize]) -> Result<Superoperator> {
    check_subspace(kraus.dim(), h0)?;
    let u0 = kraus.to_channel();
    let projected = u0.compose(l1)?;
    let block = projected.restrict(h0)?;
    Superoperator::new(block.matrix().clone(), SuperoperatorKind::Generator)
}

/// Generator that pumps the complement of `h0` into `h0`: one jump
/// operator `|k⟩⟨v|` per target `k ∈ h0` and complement vector `v`, with
/// rate `rates[k]`. An empty complement gives the zero generator.
pub fn subspace_relaxer(dim: usize, h0: &[usize], rates: &[f64]) -> Result<Superoperator> {
    check_subspace(dim, h0)?;
    if rates.len() != h0.len() {
        return Err(Error::Shape(format!("{} rates for {} targets", rates.len(), h0.len())));
    }
    let complement: Vec<usize> = (0..dim).filter(|x| !h0.contains(x)).collect();
    if complement.is_empty() {
        return Ok(Superoperator::zero_generator(dim));
    }
    if !rates.iter().any(|&r| r > 0.0) {
        return Err(Error::Domain("at least one relaxation rate must be positive".into()));
    }
    let mut dampers = Vec::new();
    for (&k, &rate) in h0.iter().zip(rates) {
        for &v in &complement {
            dampers.push((rate, linalg::unit(dim, k, v)));
        }
    }
    generator(None, &dampers)
}

fn check_subspace(dim: usize, h0: &[usize]) -> Result<()> {
    if h0.is_empty() || h0.iter().any(|&k| k >= dim) {
        return Err(Error::Shape(format!("subspace {h0:?} in dimension {dim}")));
    }
    let mut sorted = h0.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != h0.len() {
        return Err(Error::Shape("repeated subspace index".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{limit_channel, DensityMatrix};

    #[test]
    fn identity_channel_has_one_kraus() {
        let k = kraus_from_map(&Superoperator::identity_channel(3)).unwrap();
        assert_eq!(k.ops().len(), 1);
        let m = &k.ops()[0];
        let phase = m[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(linalg::max_abs(&(m - linalg::identity(3) * phase)) < 1e-12);
    }

    #[test]
    fn amplitude_damping_limit_round_trips() {
        let l = generator(None, &[(1.0, linalg::unit(3, 0, 2)), (0.4, linalg::unit(3, 1, 2))]).unwrap();
        let u0 = limit_channel(&l).unwrap();
        let k = kraus_from_map(&u0).unwrap();
        assert!(k.completeness_defect() < 1e-10);
        for a in 0..3 {
            for b in 0..3 {
                let e = linalg::unit(3, a, b);
                assert!(linalg::max_abs(&(k.apply(&e) - u0.apply(&e))) < 1e-10);
            }
        }
    }

    #[test]
    fn non_cp_map_is_rejected() {
        // transpose map
        let d = 2;
        let m = CMatrix::from_fn(4, 4, |r, s| {
            let (a, b) = (r % d, r / d);
            let (i, j) = (s % d, s / d);
            c(if a == j && b == i { 1.0 } else { 0.0 })
        });
        let t = Superoperator::new(m, SuperoperatorKind::Channel).unwrap();
        assert!(matches!(kraus_from_map(&t), Err(Error::NotCompletelyPositive(_))));
    }

    #[test]
    fn identity_kraus_gives_identity_rates() {
        let k = KrausSet::new(vec![linalg::identity(3)]).unwrap();
        let (kappa, l) = adiabatic_eliminate(&k, &[0, 1, 2]).unwrap();
        assert_eq!(kappa.entries, DMatrix::identity(3, 3));
        let rho = DensityMatrix::from_populations(&[0.2, 0.3, 0.5]).unwrap();
        assert!(linalg::max_abs(&l.apply(rho.matrix())) < 1e-15);
    }

    #[test]
    fn leaking_subspace_is_rejected() {
        let l = generator(None, &[(1.0, linalg::unit(2, 1, 0))]).unwrap();
        let k = kraus_from_map(&limit_channel(&l).unwrap()).unwrap();
        assert!(matches!(adiabatic_eliminate(&k, &[0]), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn relaxer_with_full_subspace_is_zero() {
        let l = subspace_relaxer(2, &[0, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(linalg::max_abs(l.matrix()), 0.0);
    }
}
