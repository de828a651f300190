use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::boundary::BoundaryState;
use super::foam::Foam2Complex;
use super::matrices::{KappaMatrix, ReducedLabel, TransitionMatrix};
use super::ponzano_regge::pr_transition;
use crate::error::{Error, Result};
use crate::spin::Spin;
use crate::spin_network::LinkId;

/// Source of transition amplitudes `W(out = n, in = m)`.
pub trait AmplitudeProvider: Sync {
    fn amplitude(
        &self,
        n: usize,
        out: &ReducedLabel,
        m: usize,
        inn: &ReducedLabel,
        bath: &BoundaryState,
    ) -> Result<Complex64>;
}

/// Ponzano–Regge amplitudes of a fixed foam: the in-slot links are pinned
/// to the in-label, the out-slot links to the out-label, and the remaining
/// boundary is weighted by the bath.
#[derive(Clone, Debug)]
pub struct PrProvider {
    pub foam: Foam2Complex,
    pub in_links: Vec<LinkId>,
    pub out_links: Vec<LinkId>,
    pub j_max: Spin,
}

impl PrProvider {
    fn pins(links: &[LinkId], label: &ReducedLabel) -> Result<Vec<(LinkId, Spin)>> {
        if links.len() != label.0.len() {
            return Err(Error::Shape(format!(
                "label {label} has {} spins for {} slot links",
                label.0.len(),
                links.len()
            )));
        }
        Ok(links.iter().copied().zip(label.0.iter().copied()).collect())
    }
}

impl AmplitudeProvider for PrProvider {
    fn amplitude(
        &self,
        _n: usize,
        out: &ReducedLabel,
        _m: usize,
        inn: &ReducedLabel,
        bath: &BoundaryState,
    ) -> Result<Complex64> {
        let mut pins = Self::pins(&self.in_links, inn)?;
        pins.extend(Self::pins(&self.out_links, out)?);
        pr_transition(&self.foam, &bath.with_pins(&pins), self.j_max)
    }
}

/// Independent in and out states: `W_nm = conj(W_n)·W_m`.
#[derive(Clone, Debug)]
pub struct FactorizedProvider {
    pub weights: Vec<Complex64>,
}

impl AmplitudeProvider for FactorizedProvider {
    fn amplitude(
        &self,
        n: usize,
        _out: &ReducedLabel,
        m: usize,
        _inn: &ReducedLabel,
        _bath: &BoundaryState,
    ) -> Result<Complex64> {
        match (self.weights.get(n), self.weights.get(m)) {
            (Some(wn), Some(wm)) => Ok(wn.conj() * wm),
            _ => Err(Error::Shape(format!("no factor for state {}", n.max(m)))),
        }
    }
}

/// Fills `W_nm` for all pairs of basis labels, in parallel over entries.
pub fn transition_matrix(
    provider: &dyn AmplitudeProvider,
    basis: &[ReducedLabel],
    bath: &BoundaryState,
) -> Result<TransitionMatrix> {
    let d = basis.len();
    let values: Vec<Complex64> = (0..d * d)
        .into_par_iter()
        .map(|idx| {
            let (n, m) = (idx / d, idx % d);
            provider
                .amplitude(n, &basis[n], m, &basis[m], bath)
                .map_err(|e| Error::Provider {
                    n,
                    m,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    TransitionMatrix::new(basis.to_vec(), DMatrix::from_row_slice(d, d, &values))
}

/// Row-major CSV of a complex matrix with `re`/`im` columns per entry.
pub fn write_transition_csv<W: Write>(w: &TransitionMatrix, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["out\\in".to_string()];
    for l in &w.basis {
        header.push(format!("re[{l}]"));
        header.push(format!("im[{l}]"));
    }
    wr.write_record(&header).map_err(crate::lindblad::csv_error)?;
    for (n, label) in w.basis.iter().enumerate() {
        let mut row = vec![label.to_string()];
        for m in 0..w.dim() {
            let z = w.entries[(n, m)];
            row.push(format!("{:.15e}", z.re));
            row.push(format!("{:.15e}", z.im));
        }
        wr.write_record(&row).map_err(crate::lindblad::csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_kappa_csv<W: Write>(k: &KappaMatrix, basis: &[ReducedLabel], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["out\\in".to_string()];
    header.extend(basis.iter().map(ToString::to_string));
    wr.write_record(&header).map_err(crate::lindblad::csv_error)?;
    for (n, label) in basis.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend((0..k.dim()).map(|m| format!("{:.15e}", k.entries[(n, m)])));
        wr.write_record(&row).map_err(crate::lindblad::csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::matrices::{kappa_from_w, Normalization};
    use super::*;

    fn labels(d: u32) -> Vec<ReducedLabel> {
        (1..=d).map(|t| ReducedLabel::single(Spin::from_twice(t))).collect()
    }

    #[test]
    fn factorized_unit_weights() {
        let p = FactorizedProvider {
            weights: vec![Complex64::new(1.0, 0.0); 2],
        };
        let w = transition_matrix(&p, &labels(2), &BoundaryState::Superposition(vec![])).unwrap();
        assert!(w.entries.iter().all(|&z| z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn factorized_two_level_kappa_is_independent_of_m() {
        let w1 = Complex64::new(0.3, 0.4);
        let w2 = Complex64::new(-1.1, 0.2);
        let p = FactorizedProvider { weights: vec![w1, w2] };
        let w = transition_matrix(&p, &labels(2), &BoundaryState::Superposition(vec![])).unwrap();
        assert_eq!(w.entries[(0, 1)], w1.conj() * w2);
        let k = kappa_from_w(&w, Normalization::OverN).unwrap();
        let want = w1.norm_sqr() / (w1.norm_sqr() + w2.norm_sqr());
        assert!((k.entries[(0, 0)] - want).abs() < 1e-15);
        assert!((k.entries[(0, 1)] - want).abs() < 1e-15);
    }

    #[test]
    fn provider_errors_name_the_entry() {
        let p = FactorizedProvider {
            weights: vec![Complex64::new(1.0, 0.0)],
        };
        match transition_matrix(&p, &labels(2), &BoundaryState::Superposition(vec![])) {
            Err(Error::Provider { n, m, .. }) => assert!(n == 1 || m == 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_has_labels() {
        let k = KappaMatrix::identity(2);
        let mut buf = Vec::new();
        write_kappa_csv(&k, &labels(2), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("out\\in,1/2,1\n1/2,1.0"));
    }
}
