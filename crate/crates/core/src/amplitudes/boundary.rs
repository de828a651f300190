use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Spin;
use crate::spin_network::LinkId;

/// Weights below this fraction of the largest one are dropped.
pub const GAUSSIAN_CUTOFF: f64 = 1e-8;

/// Spin weights on a single boundary link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkWeight {
    Pinned(Spin),
    /// `exp(−(j − center)²/√center)` on `0, 1/2, ..., j_max`.
    Gaussian {
        center: f64,
    },
    Table(Vec<(Spin, Complex64)>),
}

impl LinkWeight {
    /// Non-zero `(spin, weight)` pairs, ascending in spin.
    pub fn options(&self, j_max: Spin) -> Result<Vec<(Spin, Complex64)>> {
        match self {
            LinkWeight::Pinned(j) => Ok(vec![(*j, Complex64::new(1.0, 0.0))]),
            LinkWeight::Gaussian { center } => {
                if !(*center > 0.0) || !center.is_finite() {
                    return Err(Error::Domain(format!("Gaussian center {center} must be positive")));
                }
                let width = center.sqrt();
                let raw: Vec<(Spin, f64)> = Spin::range_to(j_max)
                    .map(|j| (j, (-(j.value() - center).powi(2) / width).exp()))
                    .collect();
                let peak = raw.iter().map(|x| x.1).fold(0.0, f64::max);
                Ok(raw
                    .into_iter()
                    .filter(|&(_, w)| w >= GAUSSIAN_CUTOFF * peak)
                    .map(|(j, w)| (j, Complex64::new(w, 0.0)))
                    .collect())
            }
            LinkWeight::Table(rows) => {
                let mut rows: Vec<_> = rows.iter().copied().filter(|(_, w)| w.norm() > 0.0).collect();
                rows.sort_by_key(|r| r.0);
                Ok(rows)
            }
        }
    }
}

/// A state of the boundary links: an explicit superposition of full
/// assignments, or a product of per-link weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryState {
    Superposition(Vec<(Complex64, BTreeMap<LinkId, Spin>)>),
    Product(BTreeMap<LinkId, LinkWeight>),
}

impl BoundaryState {
    pub fn pinned(spins: impl IntoIterator<Item = (LinkId, Spin)>) -> Self {
        BoundaryState::Product(spins.into_iter().map(|(l, j)| (l, LinkWeight::Pinned(j))).collect())
    }

    /// The same Gaussian on every listed link.
    pub fn gaussian(links: impl IntoIterator<Item = LinkId>, center: f64) -> Self {
        BoundaryState::Product(
            links
                .into_iter()
                .map(|l| (l, LinkWeight::Gaussian { center }))
                .collect(),
        )
    }

    /// Overrides the listed links with pinned spins.
    pub fn with_pins(&self, pins: &[(LinkId, Spin)]) -> BoundaryState {
        match self {
            BoundaryState::Product(map) => {
                let mut map = map.clone();
                for &(l, j) in pins {
                    map.insert(l, LinkWeight::Pinned(j));
                }
                BoundaryState::Product(map)
            }
            BoundaryState::Superposition(terms) => BoundaryState::Superposition(
                terms
                    .iter()
                    .map(|(w, a)| {
                        let mut a = a.clone();
                        a.extend(pins.iter().copied());
                        (*w, a)
                    })
                    .collect(),
            ),
        }
    }

    /// Links the state assigns spins to.
    pub fn covered(&self) -> Vec<LinkId> {
        match self {
            BoundaryState::Product(map) => map.keys().copied().collect(),
            BoundaryState::Superposition(terms) => {
                let mut common: Option<Vec<LinkId>> = None;
                for (_, a) in terms {
                    let keys: Vec<LinkId> = a.keys().copied().collect();
                    common = Some(match common {
                        None => keys,
                        Some(c) => c.into_iter().filter(|k| a.contains_key(k)).collect(),
                    });
                }
                common.unwrap_or_default()
            }
        }
    }

    pub fn validate(&self, j_max: Spin) -> Result<()> {
        let nonzero = match self {
            BoundaryState::Superposition(terms) => terms.iter().any(|(w, _)| w.norm() > 0.0),
            BoundaryState::Product(map) => {
                let mut ok = true;
                for w in map.values() {
                    ok &= !w.options(j_max)?.is_empty();
                }
                ok
            }
        };
        if !nonzero {
            return Err(Error::Domain("boundary state has no term of nonzero weight".into()));
        }
        Ok(())
    }
}
