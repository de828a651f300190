use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{End, Link, LinkId, Node, SpinNetwork};
use crate::error::{Error, Result};
use crate::recoupling::triangle_ok;
use crate::spin::Spin;

/// Draws per node before the labeling is started over.
pub const RETRIES_PER_NODE: usize = 1000;
/// Fresh starts before giving up.
pub const RESTARTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateLink {
    pub id: LinkId,
    pub source: End,
    pub target: End,
    pub min: Spin,
    pub max: Spin,
}

/// Graph topology with a spin range per link.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTemplate {
    pub nodes: Vec<Node>,
    pub links: Vec<TemplateLink>,
}

impl NetworkTemplate {
    /// Same topology as `net`, every link ranging over `[min, max]`.
    pub fn from_network(net: &SpinNetwork, min: Spin, max: Spin) -> Self {
        NetworkTemplate {
            nodes: net.nodes().cloned().collect(),
            links: net
                .links()
                .map(|l| TemplateLink {
                    id: l.id,
                    source: l.source,
                    target: l.target,
                    min,
                    max,
                })
                .collect(),
        }
    }

    /// Pins one link to a single spin.
    pub fn pin(&mut self, link: LinkId, spin: Spin) -> Result<()> {
        let l = self
            .links
            .iter_mut()
            .find(|l| l.id == link)
            .ok_or_else(|| Error::InvalidNetwork(format!("no link {link}")))?;
        l.min = spin;
        l.max = spin;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.links.iter().find(|l| l.min > l.max) {
            return Err(Error::InvalidNetwork(format!("link {} has an empty spin range", l.id)));
        }
        self.label(|l| l.min).map(|_| ())
    }

    fn label(&self, spin: impl Fn(&TemplateLink) -> Spin) -> Result<SpinNetwork> {
        let links = self
            .links
            .iter()
            .map(|l| Link {
                id: l.id,
                source: l.source,
                target: l.target,
                spin: spin(l),
            })
            .collect();
        SpinNetwork::new(self.nodes.clone(), links)
    }
}

/// Samples link spins uniformly from their ranges, node by node, redrawing
/// a node's unfixed links until its triangle rule holds. Deterministic in
/// `seed`.
pub fn random_network(template: &NetworkTemplate, seed: u64) -> Result<SpinNetwork> {
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let incident: Vec<Vec<usize>> = template
        .nodes
        .iter()
        .map(|n| {
            let mut out = Vec::new();
            for (k, l) in template.links.iter().enumerate() {
                for end in [l.source, l.target] {
                    if end == End::Node(n.id) {
                        out.push(k);
                    }
                }
            }
            out
        })
        .collect();
    let checked: Vec<bool> = incident.iter().map(|inc| inc.len() == 3).collect();

    'restart: for _ in 0..RESTARTS {
        let mut labels: Vec<Option<Spin>> = vec![None; template.links.len()];
        for (node, inc) in incident.iter().enumerate() {
            let free: Vec<usize> = inc.iter().copied().filter(|&k| labels[k].is_none()).collect();
            let mut tries = 0;
            loop {
                let mut trial: BTreeMap<usize, Spin> = BTreeMap::new();
                for &k in &free {
                    let l = &template.links[k];
                    trial
                        .entry(k)
                        .or_insert_with(|| Spin::from_twice(rng.gen_range(l.min.twice()..=l.max.twice())));
                }
                let spin_of = |k: usize| labels[k].or_else(|| trial.get(&k).copied()).expect("drawn");
                let ok = !checked[node] || triangle_ok(spin_of(inc[0]), spin_of(inc[1]), spin_of(inc[2]));
                if ok {
                    for (k, j) in trial {
                        labels[k] = Some(j);
                    }
                    break;
                }
                tries += 1;
                if free.is_empty() || tries >= RETRIES_PER_NODE {
                    continue 'restart;
                }
            }
        }
        return template.label(|l| {
            let k = template.links.iter().position(|x| x.id == l.id).expect("own link");
            labels[k].expect("every link touches a node")
        });
    }
    Err(Error::RetryBudgetExhausted {
        attempts: RESTARTS,
        reason: "no admissible labeling found within the retry budget".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{theta, validate};
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let t = NetworkTemplate::from_network(&theta([Spin::ONE; 3]), Spin::ZERO, Spin::integer(2));
        assert_eq!(random_network(&t, 7).unwrap(), random_network(&t, 7).unwrap());
    }

    #[test]
    fn collapsed_range_returns_the_labeling() {
        let net = theta([Spin::HALF, Spin::ONE, Spin::from_twice(3)]);
        let mut t = NetworkTemplate::from_network(&net, Spin::ZERO, Spin::ZERO);
        for (k, j) in [Spin::HALF, Spin::ONE, Spin::from_twice(3)].into_iter().enumerate() {
            t.pin(k, j).unwrap();
        }
        assert_eq!(random_network(&t, 1).unwrap(), net);
    }

    #[test]
    fn impossible_template_exhausts_budget() {
        let mut t = NetworkTemplate::from_network(&theta([Spin::ONE; 3]), Spin::HALF, Spin::HALF);
        t.pin(0, Spin::HALF).unwrap();
        assert!(matches!(random_network(&t, 3), Err(Error::RetryBudgetExhausted { .. })));
    }

    #[test]
    fn samples_validate() {
        let t = NetworkTemplate::from_network(&theta([Spin::ONE; 3]), Spin::ZERO, Spin::integer(2));
        for seed in 0..200 {
            assert!(validate(&random_network(&t, seed).unwrap()).ok);
        }
    }
}
