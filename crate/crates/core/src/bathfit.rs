//! Fitting a bath superposition of a disconnected two-vertex foam to a
//! target amplitude table.

use std::collections::{BTreeMap, BTreeSet};

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::amplitudes::{transition_matrix, BoundaryState, Foam2Complex, PrProvider, ReducedLabel, TransitionMatrix};
use crate::error::{Error, Result};
use crate::recoupling::triangle_ok;
use crate::spin::Spin;
use crate::spin_network::{random_network, LinkId, NetworkTemplate};

/// Histogram bin width of cost distributions.
pub const BIN_WIDTH: f64 = 0.1;

/// `‖a/‖a‖ − b/‖b‖‖`, in `[0, 2]`.
pub fn cost(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", a.len(), b.len())));
    }
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let d = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(d.min(2.0))
}

/// `count` distinct admissible triads with spins up to `max`, in draw order.
pub fn random_triad_labels(count: usize, max: Spin, seed: u64) -> Result<Vec<ReducedLabel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<[Spin; 3]> = triads(max);
    if all.len() < count {
        return Err(Error::Domain(format!(
            "only {} admissible triads up to {max}, {count} requested",
            all.len()
        )));
    }
    let mut pool = all;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let k = rng.gen_range(0..pool.len());
        out.push(ReducedLabel(pool.swap_remove(k).to_vec()));
    }
    Ok(out)
}

fn triads(max: Spin) -> Vec<[Spin; 3]> {
    let mut out = Vec::new();
    for a in Spin::range_to(max) {
        for b in Spin::range_to(max) {
            for c in Spin::range_to(max) {
                if triangle_ok(a, b, c) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// In-slot: the first tetrahedron without its last point. Out-slot: the
/// last tetrahedron without its first point. Both must be boundary
/// triangles.
pub fn slot_triangles(foam: &Foam2Complex) -> Result<([usize; 3], [usize; 3])> {
    let tets = foam.tetrahedra();
    let first = tets[0];
    let last = tets[tets.len() - 1];
    let slots = ([first[0], first[1], first[2]], [last[1], last[2], last[3]]);
    for tri in [slots.0, slots.1] {
        if foam.triangle_node(tri).is_none() {
            return Err(Error::InvalidFoam(format!(
                "slot triangle {tri:?} is not on the boundary"
            )));
        }
    }
    Ok(slots)
}

fn slot_links(foam: &Foam2Complex, tri: [usize; 3]) -> Result<Vec<LinkId>> {
    foam.triangle_faces(tri)
        .map(|f| f.to_vec())
        .ok_or_else(|| Error::InvalidFoam(format!("no faces for triangle {tri:?}")))
}

/// Random admissible labelings of the boundary of `foam`, restricted to the
/// links outside the two slots.
pub fn random_bath_labelings(
    foam: &Foam2Complex,
    count: usize,
    j_max: Spin,
    seed: u64,
) -> Result<Vec<BTreeMap<LinkId, Spin>>> {
    let (tin, tout) = slot_triangles(foam)?;
    let slots: BTreeSet<LinkId> = slot_links(foam, tin)?
        .into_iter()
        .chain(slot_links(foam, tout)?)
        .collect();
    let template = NetworkTemplate::from_network(&foam.boundary_network(Spin::ZERO)?, Spin::ZERO, j_max);
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| master.gen()).collect();
    seeds
        .into_par_iter()
        .map(|s| {
            let net = random_network(&template, s)?;
            Ok(net
                .links()
                .filter(|l| !slots.contains(&l.id))
                .map(|l| (l.id, l.spin))
                .collect())
        })
        .collect()
}

/// Target table of `foam` with unit-weight superposition of bath labelings.
pub fn foam_target(
    foam: &Foam2Complex,
    labels: &[ReducedLabel],
    bath: Vec<BTreeMap<LinkId, Spin>>,
    j_max: Spin,
) -> Result<TransitionMatrix> {
    let (tin, tout) = slot_triangles(foam)?;
    let provider = PrProvider {
        foam: foam.clone(),
        in_links: slot_links(foam, tin)?,
        out_links: slot_links(foam, tout)?,
        j_max,
    };
    let bath = BoundaryState::Superposition(bath.into_iter().map(|a| (Complex64::new(1.0, 0.0), a)).collect());
    transition_matrix(&provider, labels, &bath)
}

/// `W(c) = Σ_a c_a T_a`: the disconnected two-vertex foam, one term per
/// bath labeling.
#[derive(Clone, Debug)]
pub struct SimplifiedModel {
    pub basis: Vec<ReducedLabel>,
    pub terms: Vec<DMatrix<Complex64>>,
    pub labelings: Vec<BTreeMap<LinkId, Spin>>,
}

impl SimplifiedModel {
    /// Draws labelings until `count` of them give a nonzero term.
    pub fn random(basis: &[ReducedLabel], count: usize, j_max: Spin, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("the model needs at least one parameter".into()));
        }
        let foam = Foam2Complex::disconnected(2)?;
        let mut terms = Vec::new();
        let mut labelings = Vec::new();
        let mut round = 0u64;
        while terms.len() < count {
            if round >= 100 {
                return Err(Error::RetryBudgetExhausted {
                    attempts: labelings.len() + 100 * count,
                    reason: "bath labelings give vanishing model terms".into(),
                });
            }
            let draws = random_bath_labelings(&foam, count, j_max, seed.wrapping_add(round))?;
            round += 1;
            for a in draws {
                if terms.len() == count {
                    break;
                }
                let t = foam_target(&foam, basis, vec![a.clone()], j_max)?;
                if t.entries.iter().any(|z| z.norm() > 0.0) {
                    terms.push(t.entries);
                    labelings.push(a);
                }
            }
        }
        Ok(SimplifiedModel {
            basis: basis.to_vec(),
            terms,
            labelings,
        })
    }

    pub fn param_count(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn eval(&self, params: &[f64]) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut w = DMatrix::zeros(d, d);
        for (c, t) in params.iter().zip(&self.terms) {
            w += t * Complex64::new(*c, 0.0);
        }
        w
    }

    pub fn transition(&self, params: &[f64]) -> Result<TransitionMatrix> {
        TransitionMatrix::new(self.basis.clone(), self.eval(params))
    }
}

fn flat(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

#[derive(Clone, Debug)]
pub struct FitProblem {
    pub target: TransitionMatrix,
    pub model: SimplifiedModel,
    pub restarts: usize,
    /// Standard-deviation tolerance of the simplex.
    pub tolerance: f64,
    /// Iteration budget per restart.
    pub max_iters: u64,
    /// Adds one run started from the real least-squares weights.
    pub linear_start: bool,
    pub seed: u64,
}

impl FitProblem {
    pub fn new(target: TransitionMatrix, model: SimplifiedModel, seed: u64) -> Self {
        FitProblem {
            target,
            model,
            restarts: 5,
            tolerance: 1e-8,
            max_iters: 20_000,
            linear_start: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.param_count() == 0 {
            return Err(Error::Domain("the model needs at least one parameter".into()));
        }
        if self.model.dim() != self.target.dim() {
            return Err(Error::Shape(format!(
                "model of dimension {} against a target of dimension {}",
                self.model.dim(),
                self.target.dim()
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Config("at least one restart is required".into()));
        }
        Ok(())
    }

    /// Cost of the model at `params` against the target; a vanishing model
    /// counts as the worst value 2.
    pub fn cost_at(&self, params: &[f64]) -> f64 {
        cost(&self.target.flatten(), &flat(&self.model.eval(params))).unwrap_or(2.0)
    }
}

struct Objective<'a>(&'a FitProblem);

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.cost_at(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub params: Vec<f64>,
    pub cost: f64,
    pub evals: u64,
    pub seed: u64,
    pub status: FitStatus,
}

/// Uniform draw from the probability simplex.
pub fn simplex_draw(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn restart_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Real weights minimizing `‖Σ c_a T_a − W_target‖₂`.
pub fn least_squares_weights(p: &FitProblem) -> Option<Vec<f64>> {
    let d = p.model.dim();
    let rows = 2 * d * d;
    let part = |z: Complex64, r: usize| if r.is_multiple_of(2) { z.re } else { z.im };
    let a = DMatrix::from_fn(rows, p.model.param_count(), |r, c| {
        part(p.model.terms[c][((r / 2) / d, (r / 2) % d)], r)
    });
    let b = nalgebra::DVector::from_fn(rows, |r, _| part(p.target.entries[((r / 2) / d, (r / 2) % d)], r));
    let x = a.svd(true, true).solve(&b, 1e-12).ok()?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Nelder–Mead over real superposition weights from `restarts` uniform
/// simplex draws, plus the least-squares weights when `linear_start` is
/// set; the best run wins, ties to the earliest.
pub fn fit_bath(p: &FitProblem) -> Result<FitReport> {
    p.validate()?;
    let n = p.model.param_count();
    let mut starts: Vec<Vec<f64>> = (0..p.restarts as u64)
        .map(|k| simplex_draw(&mut restart_rng(p.seed, k), n))
        .collect();
    if p.linear_start {
        if let Some(x) = least_squares_weights(p) {
            starts.push(x);
        }
    }
    let runs: Vec<(Vec<f64>, f64, u64, bool)> = starts
        .into_par_iter()
        .map(|x0| {
            let scale = 0.05 * x0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0 / n as f64);
            let mut simplex = vec![x0.clone()];
            for i in 0..n {
                let mut v = x0.clone();
                v[i] += scale;
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(p.tolerance)
                .map_err(|e| Error::Domain(e.to_string()))?;
            let res = Executor::new(Objective(p), solver)
                .configure(|s| s.max_iters(p.max_iters))
                .run()
                .map_err(|e| Error::Domain(e.to_string()))?;
            let state = res.state();
            let best = state.get_best_param().cloned().unwrap_or(x0);
            let evals = state.get_func_counts().get("cost_count").copied().unwrap_or(0);
            let converged = matches!(
                state.get_termination_status(),
                TerminationStatus::Terminated(TerminationReason::SolverConverged)
            );
            Ok((best.clone(), p.cost_at(&best), evals, converged))
        })
        .collect::<Result<_>>()?;
    let evals = runs.iter().map(|r| r.2).sum();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.1.total_cmp(&b.1).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one restart");
    Ok(FitReport {
        params: best.0,
        cost: best.1,
        evals,
        seed: p.seed,
        status: if best.3 {
            FitStatus::Converged
        } else {
            FitStatus::BudgetExhausted
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostHistogram {
    pub bin_width: f64,
    /// Left edges `0, 0.1, ..., 1.9`.
    pub bin_left: Vec<f64>,
    /// Probability density per bin; integrates to 1.
    pub density: Vec<f64>,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl CostHistogram {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("no samples".into()));
        }
        let bins = (2.0 / BIN_WIDTH).round() as usize;
        let mut counts = vec![0usize; bins];
        for &c in values {
            let k = ((c / BIN_WIDTH).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        let n = values.len() as f64;
        Ok(CostHistogram {
            bin_width: BIN_WIDTH,
            bin_left: (0..bins).map(|k| k as f64 * BIN_WIDTH).collect(),
            density: counts.iter().map(|&c| c as f64 / (n * BIN_WIDTH)).collect(),
            samples: values.len(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: values.iter().sum::<f64>() / n,
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "density"])
            .map_err(crate::lindblad::csv_error)?;
        for (l, d) in self.bin_left.iter().zip(&self.density) {
            w.write_record([format!("{l:.1}"), format!("{d:.15e}")])
                .map_err(crate::lindblad::csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Costs at `n` uniform simplex draws of the model weights; draw `k` uses
/// stream `k` of the seed.
pub fn sample_costs(p: &FitProblem, n: usize) -> Result<Vec<f64>> {
    p.validate()?;
    let m = p.model.param_count();
    Ok((0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = restart_rng(p.seed ^ 0x005e_ed0f_c057, k);
            p.cost_at(&simplex_draw(&mut rng, m))
        })
        .collect())
}

pub fn sample_cost_distribution(p: &FitProblem, n: usize) -> Result<CostHistogram> {
    CostHistogram::from_values(&sample_costs(p, n)?)
}
