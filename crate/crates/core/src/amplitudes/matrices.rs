use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Spin;

/// Label of a reduced basis state: the spins pinned on the in/out slot links.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReducedLabel(pub Vec<Spin>);

impl ReducedLabel {
    pub fn single(j: Spin) -> Self {
        ReducedLabel(vec![j])
    }

    /// Mean spin of the label, used as the center of Gaussian bath weights.
    pub fn mean_spin(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|j| j.value()).sum::<f64>() / self.0.len() as f64
    }

    /// Label spins summed, `Σ j`.
    pub fn total(&self) -> f64 {
        self.0.iter().map(|j| j.value()).sum()
    }
}

impl fmt::Display for ReducedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Spin::to_string).collect();
        write!(f, "{}", parts.join("|"))
    }
}

impl std::str::FromStr for ReducedLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('|')
            .map(str::parse)
            .collect::<Result<Vec<Spin>>>()
            .map(ReducedLabel)
    }
}

/// Complex amplitudes `W_nm`: row `n` is the out-state, column `m` the in-state.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub basis: Vec<ReducedLabel>,
    pub entries: DMatrix<Complex64>,
}

impl TransitionMatrix {
    pub fn new(basis: Vec<ReducedLabel>, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() != basis.len() {
            return Err(Error::Shape(format!(
                "{}x{} amplitudes for a basis of {}",
                entries.nrows(),
                entries.ncols(),
                basis.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite transition amplitude".into()));
        }
        Ok(TransitionMatrix { basis, entries })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row-major flattening `W_00, W_01, ...`.
    pub fn flatten(&self) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .flat_map(|n| (0..d).map(move |m| (n, m)))
            .map(|(n, m)| self.entries[(n, m)])
            .collect()
    }
}

/// Which index of `|W_nm|²` the rates are normalized over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `κ_nm = |W_nm|² / Σ_n |W_nm|²`; columns are outcome distributions.
    #[default]
    OverN,
    /// `κ_nm = |W_nm|² / Σ_m |W_nm|²`.
    OverM,
}

/// Non-negative damping rates for the jump operators `|n⟩⟨m|`.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaMatrix {
    pub entries: DMatrix<f64>,
    pub convention: Normalization,
}

impl KappaMatrix {
    pub fn new(entries: DMatrix<f64>, convention: Normalization) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Shape("kappa matrix must be square".into()));
        }
        if entries.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::Domain("kappa entries must be finite and non-negative".into()));
        }
        Ok(KappaMatrix { entries, convention })
    }

    pub fn identity(dim: usize) -> Self {
        KappaMatrix {
            entries: DMatrix::identity(dim, dim),
            convention: Normalization::OverN,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `Σ_n κ_nm` for each `m`.
    pub fn column_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    /// Classical rate matrix of the populations: off-diagonal `κ_nm`, each
    /// column summing to zero.
    pub fn population_generator(&self) -> DMatrix<f64> {
        let mut g = self.entries.clone();
        for m in 0..self.dim() {
            g[(m, m)] = 0.0;
            let out: f64 = g.column(m).sum();
            g[(m, m)] = -out;
        }
        g
    }

    /// Nonzero population relaxation rates, ascending.
    pub fn relaxation_rates(&self) -> Vec<f64> {
        let g = self.population_generator();
        let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut r: Vec<f64> = g
            .complex_eigenvalues()
            .iter()
            .map(|z| -z.re)
            .filter(|&x| x > 1e-10 * scale)
            .collect();
        r.sort_by(f64::total_cmp);
        r
    }
}

/// Normalized rates from squared amplitude moduli.
pub fn kappa_from_w(w: &TransitionMatrix, convention: Normalization) -> Result<KappaMatrix> {
    let sq = w.entries.map(|z| z.norm_sqr());
    let d = w.dim();
    let mut k = DMatrix::zeros(d, d);
    match convention {
        Normalization::OverN => {
            for m in 0..d {
                let total: f64 = sq.column(m).sum();
                if total == 0.0 {
                    return Err(Error::ZeroColumn { in_state: m });
                }
                for n in 0..d {
                    k[(n, m)] = sq[(n, m)] / total;
                }
            }
        }
        Normalization::OverM => {
            for n in 0..d {
                let total: f64 = sq.row(n).sum();
                if total == 0.0 {
                    return Err(Error::Domain(format!(
                        "transition matrix row for out-state {n} is identically zero"
                    )));
                }
                for m in 0..d {
                    k[(n, m)] = sq[(n, m)] / total;
                }
            }
        }
    }
    KappaMatrix::new(k, convention)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(d: usize) -> Vec<ReducedLabel> {
        (1..=d as u32)
            .map(|t| ReducedLabel::single(Spin::from_twice(t)))
            .collect()
    }

    #[test]
    fn all_ones_gives_uniform_rates() {
        let w = TransitionMatrix::new(labels(2), DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0))).unwrap();
        let k = kappa_from_w(&w, Normalization::OverN).unwrap();
        assert!(k.entries.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn diagonal_gives_identity() {
        let w = TransitionMatrix::new(
            labels(3),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, -3.0),
                Complex64::new(0.5, 0.5),
            ])),
        )
        .unwrap();
        for conv in [Normalization::OverN, Normalization::OverM] {
            let k = kappa_from_w(&w, conv).unwrap();
            assert_eq!(k.entries, DMatrix::identity(3, 3));
        }
    }

    #[test]
    fn zero_column_names_in_state() {
        let mut e = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        e.column_mut(1).fill(Complex64::new(0.0, 0.0));
        let w = TransitionMatrix::new(labels(3), e).unwrap();
        match kappa_from_w(&w, Normalization::OverN) {
            Err(Error::ZeroColumn { in_state }) => assert_eq!(in_state, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_round_trip() {
        let l: ReducedLabel = "1/2|1|3/2".parse().unwrap();
        assert_eq!(l.to_string(), "1/2|1|3/2");
        assert_eq!(l.mean_spin(), 1.0);
    }
}
