//! Declarative scenarios: amplitudes, rates, evolution, observables and
//! the artifacts they produce.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{
    kappa_from_w, transition_matrix, two_level_kappa, write_kappa_csv, write_transition_csv, AsymptoticParams,
    BoundaryState, Foam2Complex, Gluing, KappaMatrix, LinkWeight, Normalization, PrProvider, ReducedLabel,
    TransitionMatrix,
};
use crate::bathfit::{
    fit_bath, foam_target, random_bath_labelings, random_triad_labels, sample_costs, CostHistogram, FitProblem,
    FitReport, SimplifiedModel,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::lindblad::{
    effective_generator, evolve_effective, evolve_kicked, steady_states, Coherent, DensityMatrix, EvolutionConfig,
    KickOrder, StateCheck, Trajectory, EVOLVED_TRACE_TOL, HERMITIAN_TOL, POSITIVITY_TOL,
};
use crate::observables::{
    area, energy_release, mean_energy, spectral_temperature, thermal_flow_check, EnergySpectrum, ObservableSeries,
    Temperature, TemperatureOptions,
};
use crate::qed_reference::{compare_curves, dicke_cascade, DickeConfig};
use crate::spin::Spin;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum FoamSpec {
    Chain {
        vertices: usize,
    },
    Disconnected {
        vertices: usize,
    },
    Tetrahedra {
        tets: Vec<[usize; 4]>,
        #[serde(default)]
        gluing: Gluing,
    },
}

impl FoamSpec {
    pub fn build(&self) -> Result<Foam2Complex> {
        match self {
            FoamSpec::Chain { vertices } => Foam2Complex::chain(*vertices),
            FoamSpec::Disconnected { vertices } => Foam2Complex::disconnected(*vertices),
            FoamSpec::Tetrahedra { tets, gluing } => Foam2Complex::from_tetrahedra(tets, *gluing),
        }
    }
}

/// Weight on every boundary face outside the slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum BathSpec {
    Gaussian { center: f64 },
    Pinned { spin: Spin },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    /// Ponzano–Regge amplitudes of a foam; slots are given as faces `[a, b]`
    /// in label order.
    Pr3d {
        foam: FoamSpec,
        in_faces: Vec<[usize; 2]>,
        out_faces: Vec<[usize; 2]>,
        j_max: Spin,
        bath: BathSpec,
        #[serde(default)]
        normalization: Normalization,
    },
    /// Two-level large-spin rates for scale factors `λ₁, λ₂`.
    Asymptotic {
        lambdas: [f64; 2],
        gamma_i: f64,
        s_r: f64,
        alpha: f64,
        #[serde(default = "one")]
        n_plus_abs: f64,
    },
    /// Rates given directly, `entries[n][m] = κ_nm`.
    Kappa { entries: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum InitialState {
    /// Pure basis state.
    Label(String),
    /// Normalized `Σ c |label⟩` with real weights.
    Superposition(Vec<(f64, String)>),
    Populations(Vec<f64>),
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionBlock {
    pub g: f64,
    pub steps: usize,
    pub initial: InitialState,
    #[serde(default)]
    pub kick_times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesBlock {
    #[serde(default = "one")]
    pub energy_scale: f64,
    #[serde(default = "default_gamma_i")]
    pub gamma_i: f64,
    #[serde(default)]
    pub temperature_floor: bool,
    #[serde(default = "one")]
    pub flow_parameter: f64,
    /// Coherence moduli exported alongside the populations.
    #[serde(default)]
    pub coherences: Vec<(usize, usize)>,
}

fn default_gamma_i() -> f64 {
    0.2375
}

impl Default for ObservablesBlock {
    fn default() -> Self {
        ObservablesBlock {
            energy_scale: 1.0,
            gamma_i: default_gamma_i(),
            temperature_floor: false,
            flow_parameter: 1.0,
            coherences: Vec::new(),
        }
    }
}

/// Release comparison with the collective-decay reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareBlock {
    #[serde(default = "two")]
    pub qubits: usize,
    #[serde(default = "forty")]
    pub kappa_over_gamma: f64,
    /// Horizon in units of the inverse effective damping.
    #[serde(default = "ten")]
    pub horizon: f64,
    #[serde(default = "points")]
    pub points: usize,
}

fn two() -> usize {
    2
}
fn forty() -> f64 {
    40.0
}
fn ten() -> f64 {
    10.0
}
fn points() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    /// Chain lengths of the target foams.
    pub vertices: Vec<usize>,
    #[serde(default = "ten_usize")]
    pub labels: usize,
    #[serde(default = "spin_two")]
    pub label_j_max: Spin,
    #[serde(default = "spin_two")]
    pub j_max: Spin,
    #[serde(default = "ten_thousand")]
    pub bath_samples: usize,
    #[serde(default = "twenty")]
    pub model_terms: usize,
    #[serde(default = "ten_thousand")]
    pub cost_samples: usize,
    #[serde(default = "five")]
    pub restarts: usize,
    #[serde(default = "tol")]
    pub tolerance: f64,
}

fn ten_usize() -> usize {
    10
}
fn spin_two() -> Spin {
    Spin::integer(2)
}
fn ten_thousand() -> usize {
    10_000
}
fn twenty() -> usize {
    20
}
fn five() -> usize {
    5
}
fn tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub basis: Vec<String>,
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub evolution: Option<EvolutionBlock>,
    #[serde(default)]
    pub observables: ObservablesBlock,
    #[serde(default)]
    pub compare: Option<CompareBlock>,
    #[serde(default)]
    pub fit: Option<FitBlock>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ScenarioConfig::from_toml(&fs::read_to_string(path)?)
    }

    /// Stable text form with every default filled in.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn labels(&self) -> Result<Vec<ReducedLabel>> {
        self.basis
            .iter()
            .map(|s| s.parse().map_err(|_| Error::Config(format!("bad basis label {s:?}"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.backend.is_none() && self.fit.is_none() {
            return Err(Error::Config("a scenario needs a backend or a fit block".into()));
        }
        if let Some(b) = &self.backend {
            let d = self.labels()?.len();
            let want = match b {
                Backend::Asymptotic { .. } => Some(2),
                Backend::Kappa { entries } => Some(entries.len()),
                Backend::Pr3d { .. } => None,
            };
            if d == 0 {
                return Err(Error::Config("the basis is empty".into()));
            }
            if let Some(w) = want {
                if w != d {
                    return Err(Error::Config(format!("backend needs {w} basis labels, {d} given")));
                }
            }
        }
        if let Some(e) = &self.evolution {
            EvolutionConfig {
                g: e.g,
                steps: e.steps,
                epsilon: None,
                kick_times: e.kick_times.clone(),
            }
            .validate()?;
        }
        if !(self.observables.energy_scale > 0.0) {
            return Err(Error::Config("energy_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Builds the initial state over `labels`.
pub fn initial_state(init: &InitialState, labels: &[ReducedLabel]) -> Result<DensityMatrix> {
    let index = |s: &str| -> Result<usize> {
        let l: ReducedLabel = s.parse().map_err(|_| Error::Config(format!("bad label {s:?}")))?;
        labels
            .iter()
            .position(|x| *x == l)
            .ok_or_else(|| Error::Config(format!("label {s} is not in the basis")))
    };
    let d = labels.len();
    match init {
        InitialState::Label(s) => Ok(DensityMatrix::basis_state(d, index(s)?)),
        InitialState::Superposition(terms) => {
            let mut amp = vec![Complex64::new(0.0, 0.0); d];
            for (w, s) in terms {
                amp[index(s)?] += Complex64::new(*w, 0.0);
            }
            let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNorm);
            }
            DensityMatrix::pure(&amp.iter().map(|z| z / norm).collect::<Vec<_>>())
        }
        InitialState::Populations(p) => {
            if p.len() != d {
                return Err(Error::Config(format!("{} populations for {d} states", p.len())));
            }
            DensityMatrix::from_populations(p)
        }
        InitialState::Matrix { re, im } => {
            if re.len() != d || re.iter().any(|r| r.len() != d) {
                return Err(Error::Config("initial matrix has the wrong shape".into()));
            }
            let m = CMatrix::from_fn(d, d, |a, b| {
                Complex64::new(
                    re[a][b],
                    im.as_ref().and_then(|x| x.get(a)?.get(b).copied()).unwrap_or(0.0),
                )
            });
            DensityMatrix::new(m)
        }
    }
}

fn face_ids(foam: &Foam2Complex, faces: &[[usize; 2]]) -> Result<Vec<usize>> {
    faces
        .iter()
        .map(|&[a, b]| {
            foam.face(a, b)
                .ok_or_else(|| Error::InvalidFoam(format!("no face ({a}, {b})")))
        })
        .collect()
}

/// Amplitudes (when the backend has them) and rates.
pub fn build_rates(backend: &Backend, labels: &[ReducedLabel]) -> Result<(Option<TransitionMatrix>, KappaMatrix)> {
    match backend {
        Backend::Pr3d {
            foam,
            in_faces,
            out_faces,
            j_max,
            bath,
            normalization,
        } => {
            let foam = foam.build()?;
            let in_links = face_ids(&foam, in_faces)?;
            let out_links = face_ids(&foam, out_faces)?;
            let weight = match bath {
                BathSpec::Gaussian { center } => LinkWeight::Gaussian { center: *center },
                BathSpec::Pinned { spin } => LinkWeight::Pinned(*spin),
            };
            let rest: BTreeMap<usize, LinkWeight> = foam
                .boundary_faces()
                .iter()
                .filter(|f| !in_links.contains(f) && !out_links.contains(f))
                .map(|&f| (f, weight.clone()))
                .collect();
            let provider = PrProvider {
                foam,
                in_links,
                out_links,
                j_max: *j_max,
            };
            let w = transition_matrix(&provider, labels, &BoundaryState::Product(rest))?;
            let k = kappa_from_w(&w, *normalization)?;
            Ok((Some(w), k))
        }
        Backend::Asymptotic {
            lambdas,
            gamma_i,
            s_r,
            alpha,
            n_plus_abs,
        } => {
            let p = AsymptoticParams::new(*gamma_i, *s_r, *alpha, *n_plus_abs)?;
            Ok((None, two_level_kappa(lambdas[0], lambdas[1], &p)?))
        }
        Backend::Kappa { entries } => {
            let d = entries.len();
            if entries.iter().any(|r| r.len() != d) {
                return Err(Error::Config("kappa table must be square".into()));
            }
            let m = DMatrix::from_fn(d, d, |n, k| entries[n][k]);
            Ok((None, KappaMatrix::new(m, Normalization::OverN)?))
        }
    }
}

/// Worst values of the state checks over a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub max_trace_error: f64,
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
    pub clamps: usize,
    pub holds: bool,
}

pub fn invariant_summary(traj: &Trajectory) -> InvariantSummary {
    let checks: Vec<StateCheck> = traj.states.iter().map(|s| s.check()).collect();
    let max_trace_error = checks.iter().map(|c| c.trace_error).fold(0.0, f64::max);
    let max_hermiticity = checks.iter().map(|c| c.hermiticity).fold(0.0, f64::max);
    let min_eigenvalue = checks.iter().map(|c| c.min_eigenvalue).fold(f64::INFINITY, f64::min);
    InvariantSummary {
        max_trace_error,
        max_hermiticity,
        min_eigenvalue,
        clamps: traj.clamps,
        holds: max_trace_error <= EVOLVED_TRACE_TOL
            && max_hermiticity <= HERMITIAN_TOL
            && min_eigenvalue >= -POSITIVITY_TOL,
    }
}

/// Shape of a relaxation run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeSummary {
    /// Mean area never increases (up to `1e-12`).
    pub monotone_area: bool,
    /// Largest number of states simultaneously above 1% population.
    pub max_active: usize,
    /// Nonzero population relaxation rates, ascending.
    pub rates: Vec<f64>,
    /// Largest over smallest rate.
    pub separation: f64,
    /// Step at which each level peaks.
    pub peak_steps: Vec<usize>,
}

pub fn cascade_summary(traj: &Trajectory, areas: &[f64], kappa: &KappaMatrix) -> CascadeSummary {
    let mean_area: Vec<f64> = traj
        .states
        .iter()
        .map(|s| s.populations().iter().zip(areas).map(|(p, a)| p * a).sum())
        .collect();
    let scale = areas.iter().copied().fold(0.0, f64::max).max(1.0);
    let rates = kappa.relaxation_rates();
    let separation = match (rates.first(), rates.last()) {
        (Some(lo), Some(hi)) => hi / lo,
        _ => 0.0,
    };
    CascadeSummary {
        monotone_area: mean_area.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale),
        max_active: traj
            .states
            .iter()
            .map(|s| s.populations().iter().filter(|&&p| p > 0.01).count())
            .max()
            .unwrap_or(0),
        rates,
        separation,
        peak_steps: (0..traj.dim())
            .map(|k| {
                let p = traj.population(k);
                (0..p.len()).fold(0, |best, i| if p[i] > p[best] { i } else { best })
            })
            .collect(),
    }
}

/// Temperature along a run and whether it goes from negative to positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TemperatureSummary {
    pub defined_steps: usize,
    pub first_beta: Option<f64>,
    pub last_beta: Option<f64>,
    pub negative_to_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowSummary {
    pub max_flow_residual: f64,
    pub max_commutator: f64,
    /// Largest `‖ρ_{k+1} − ρ_k‖` (Frobenius).
    pub max_step_change: f64,
}

/// Per-step observables of a trajectory.
#[derive(Clone, Debug)]
pub struct ObservableTable {
    pub energy: Vec<f64>,
    pub area: Vec<f64>,
    pub release: ObservableSeries,
    pub temperature: Vec<Option<Temperature>>,
    pub flow: Vec<(f64, f64)>,
    pub step_change: Vec<f64>,
}

impl ObservableTable {
    pub fn compute(traj: &Trajectory, spec: &EnergySpectrum, g: f64, obs: &ObservablesBlock) -> Result<Self> {
        let areas: Vec<f64> = spec
            .labels
            .iter()
            .map(|l| l.0.iter().map(|&j| area(j, obs.gamma_i)).sum())
            .collect();
        let opts = TemperatureOptions {
            floor_zero_populations: obs.temperature_floor,
        };
        Ok(ObservableTable {
            energy: mean_energy(traj, spec),
            area: traj
                .states
                .iter()
                .map(|s| s.populations().iter().zip(&areas).map(|(p, a)| p * a).sum())
                .collect(),
            release: energy_release(traj, spec, g)?,
            temperature: traj
                .states
                .iter()
                .map(|s| spectral_temperature(s, spec, opts).ok())
                .collect(),
            flow: traj
                .states
                .iter()
                .map(|s| thermal_flow_check(s, obs.flow_parameter))
                .collect::<Result<_>>()?,
            step_change: traj
                .states
                .windows(2)
                .map(|w| linalg::frobenius(&(w[1].matrix() - w[0].matrix())))
                .collect(),
        })
    }

    pub fn temperature_summary(&self) -> TemperatureSummary {
        let defined: Vec<f64> = self.temperature.iter().flatten().map(|t| t.beta).collect();
        let mut seen_negative = false;
        let mut flips = false;
        for &b in &defined {
            seen_negative |= b < 0.0;
            flips |= seen_negative && b > 0.0;
        }
        TemperatureSummary {
            defined_steps: defined.len(),
            first_beta: defined.first().copied(),
            last_beta: defined.last().copied(),
            negative_to_positive: flips,
        }
    }

    pub fn flow_summary(&self) -> FlowSummary {
        FlowSummary {
            max_flow_residual: self.flow.iter().map(|f| f.0).fold(0.0, f64::max),
            max_commutator: self.flow.iter().map(|f| f.1).fold(0.0, f64::max),
            max_step_change: self.step_change.iter().copied().fold(0.0, f64::max),
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn write_csv<W: std::io::Write>(&self, times: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "step",
            "t",
            "energy",
            "area",
            "release",
            "beta",
            "T",
            "flow_residual",
            "commutator",
            "step_change",
        ])
        .map_err(crate::lindblad::csv_error)?;
        let f = |x: f64| format!("{x:.15e}");
        for k in 0..self.energy.len() {
            let (beta, t) = self.temperature[k].map_or((f64::NAN, f64::NAN), |t| (t.beta, t.t));
            w.write_record([
                k.to_string(),
                format!("{:.12e}", times[k]),
                f(self.energy[k]),
                f(self.area[k]),
                f(self.release.y.get(k).copied().unwrap_or(f64::NAN)),
                f(beta),
                f(t),
                f(self.flow[k].0),
                f(self.flow[k].1),
                f(self.step_change.get(k).copied().unwrap_or(f64::NAN)),
            ])
            .map_err(crate::lindblad::csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadySummary {
    pub kernel_dim: usize,
    pub residual: f64,
    /// Populations of each independent steady state.
    pub populations: Vec<Vec<f64>>,
}

pub fn steady_summary(kappa: &KappaMatrix) -> Result<SteadySummary> {
    let s = steady_states(&effective_generator(kappa)?)?;
    Ok(SteadySummary {
        kernel_dim: s.kernel_dim,
        residual: s.residual,
        populations: s.states.iter().map(|r| r.populations()).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSuiteEntry {
    pub vertices: usize,
    pub fit: FitReport,
    pub sample_min: f64,
    pub sample_mean: f64,
    pub sample_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSuite {
    pub labels: Vec<String>,
    pub bath_samples: usize,
    pub cost_samples: usize,
    pub model_terms: usize,
    pub entries: Vec<FitSuiteEntry>,
    /// Histogram of the last target.
    pub histogram: Option<CostHistogram>,
}

/// Target of the chain foam with `vertices` vertices against the shared
/// simplified model; also returns the basis labels.
pub fn fit_problem(block: &FitBlock, seed: u64, vertices: usize) -> Result<(Vec<ReducedLabel>, FitProblem)> {
    let labels = random_triad_labels(block.labels, block.label_j_max, seed)?;
    let model = SimplifiedModel::random(&labels, block.model_terms, block.j_max, seed.wrapping_add(1))?;
    let foam = Foam2Complex::chain(vertices)?;
    let bath = random_bath_labelings(
        &foam,
        block.bath_samples,
        block.j_max,
        seed.wrapping_add(100 + vertices as u64),
    )?;
    let target = foam_target(&foam, &labels, bath, block.j_max)?;
    let mut p = FitProblem::new(target, model, seed.wrapping_add(2));
    p.restarts = block.restarts;
    p.tolerance = block.tolerance;
    Ok((labels, p))
}

/// Fits the disconnected two-vertex model to chain-foam targets.
pub fn run_fit_suite(block: &FitBlock, seed: u64) -> Result<FitSuite> {
    let mut labels = Vec::new();
    let mut entries = Vec::new();
    let mut histogram = None;
    for &v in &block.vertices {
        let (l, p) = fit_problem(block, seed, v)?;
        labels = l;
        let fit = fit_bath(&p)?;
        let h = CostHistogram::from_values(&sample_costs(&p, block.cost_samples)?)?;
        entries.push(FitSuiteEntry {
            vertices: v,
            fit,
            sample_min: h.min,
            sample_mean: h.mean,
            sample_max: h.max,
        });
        histogram = Some(h);
    }
    Ok(FitSuite {
        labels: labels.iter().map(ToString::to_string).collect(),
        bath_samples: block.bath_samples,
        cost_samples: block.cost_samples,
        model_terms: block.model_terms,
        entries,
        histogram,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub evolved_trace: f64,
    pub positivity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub status: String,
    pub error: Option<String>,
    pub config: Option<ScenarioConfig>,
    pub tolerances: Tolerances,
    pub dim: Option<usize>,
    pub kappa_column_sums: Option<Vec<f64>>,
    pub steady: Option<SteadySummary>,
    pub final_populations: Option<Vec<f64>>,
    pub invariants: Option<InvariantSummary>,
    pub cascade: Option<CascadeSummary>,
    pub telescoping_error: Option<f64>,
    pub temperature: Option<TemperatureSummary>,
    pub flow: Option<FlowSummary>,
    pub dicke_distance: Option<f64>,
    pub fit: Option<FitSuite>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    fn empty(cfg: &ScenarioConfig) -> Self {
        RunReport {
            name: cfg.name.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            status: "ok".into(),
            error: None,
            config: Some(cfg.clone()),
            tolerances: Tolerances {
                hermitian: HERMITIAN_TOL,
                evolved_trace: EVOLVED_TRACE_TOL,
                positivity: POSITIVITY_TOL,
            },
            dim: None,
            kappa_column_sums: None,
            steady: None,
            final_populations: None,
            invariants: None,
            cascade: None,
            telescoping_error: None,
            temperature: None,
            flow: None,
            dicke_distance: None,
            fit: None,
            files: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Report of a run that failed before or during the pipeline.
    pub fn failure(cfg: Option<&ScenarioConfig>, err: &Error) -> Self {
        let mut r = match cfg {
            Some(c) => RunReport::empty(c),
            None => RunReport::empty(&ScenarioConfig {
                name: String::new(),
                seed: 0,
                output: None,
                basis: Vec::new(),
                backend: None,
                evolution: None,
                observables: ObservablesBlock::default(),
                compare: None,
                fit: None,
            }),
        };
        if cfg.is_none() {
            r.config = None;
        }
        r.status = "error".into();
        r.error = Some(err.to_string());
        r
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }
}

/// Everything a run computes, kept in memory.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub labels: Vec<ReducedLabel>,
    pub w: Option<TransitionMatrix>,
    pub kappa: Option<KappaMatrix>,
    pub spectrum: Option<EnergySpectrum>,
    pub trajectory: Option<Trajectory>,
    pub observables: Option<ObservableTable>,
    pub dicke_release: Option<ObservableSeries>,
    pub report: RunReport,
}

/// Runs the pipeline without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = RunReport::empty(cfg);
    let mut run = ScenarioRun {
        labels: Vec::new(),
        w: None,
        kappa: None,
        spectrum: None,
        trajectory: None,
        observables: None,
        dicke_release: None,
        report: RunReport::empty(cfg),
    };
    if let Some(backend) = &cfg.backend {
        let labels = cfg.labels()?;
        let (w, kappa) = build_rates(backend, &labels)?;
        report.dim = Some(labels.len());
        report.kappa_column_sums = Some(kappa.column_sums());
        report.steady = Some(steady_summary(&kappa)?);
        let spectrum = EnergySpectrum::new(labels.clone(), cfg.observables.energy_scale).ok();
        if let Some(ev) = &cfg.evolution {
            let rho0 = initial_state(&ev.initial, &labels)?;
            let traj = match &ev.kick_times {
                None => evolve_effective(&kappa, &EvolutionConfig::uniform(ev.g, ev.steps), &rho0)?,
                Some(times) => {
                    let dampers: Vec<(f64, CMatrix)> = kappa_dampers(&kappa, ev.g);
                    evolve_kicked(&Coherent::None, &dampers, times, &rho0, KickOrder::default())?
                }
            };
            report.invariants = Some(invariant_summary(&traj));
            report.final_populations = Some(traj.last().populations());
            if let Some(spec) = &spectrum {
                let table = ObservableTable::compute(&traj, spec, ev.g, &cfg.observables)?;
                let released: f64 = table.release.y.iter().sum::<f64>() * ev.g;
                let drop = table.energy[0] - table.energy[table.energy.len() - 1];
                report.telescoping_error = Some((released - drop).abs());
                report.temperature = Some(table.temperature_summary());
                report.flow = Some(table.flow_summary());
                let areas: Vec<f64> = labels
                    .iter()
                    .map(|l| l.0.iter().map(|&j| area(j, cfg.observables.gamma_i)).sum())
                    .collect();
                report.cascade = Some(cascade_summary(&traj, &areas, &kappa));
                if let Some(cmp) = &cfg.compare {
                    let dicke = DickeConfig::uniform(cmp.qubits, cmp.kappa_over_gamma, cmp.horizon, cmp.points)?;
                    let top = DensityMatrix::basis_state(cmp.qubits + 1, cmp.qubits);
                    let rel = dicke_cascade(&dicke, &top)?.release()?;
                    report.dicke_distance = Some(compare_curves(&table.release, &rel)?);
                    run.dicke_release = Some(rel);
                }
                run.observables = Some(table);
            }
            run.trajectory = Some(traj);
        }
        run.labels = labels;
        run.w = w;
        run.kappa = Some(kappa);
        run.spectrum = spectrum;
    }
    if let Some(fit) = &cfg.fit {
        report.fit = Some(run_fit_suite(fit, cfg.seed)?);
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    run.report = report;
    Ok(run)
}

/// Per-kick dampers `(κ_nm, |n⟩⟨m|)` scaled so one kick carries weight `g`.
fn kappa_dampers(kappa: &KappaMatrix, g: f64) -> Vec<(f64, CMatrix)> {
    let d = kappa.dim();
    let mut out = Vec::new();
    for n in 0..d {
        for m in 0..d {
            let k = kappa.entries[(n, m)];
            if k > 0.0 {
                out.push((g * k, linalg::unit(d, n, m)));
            }
        }
    }
    out
}

/// Runs the pipeline and writes its artifacts into `out`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport> {
    fs::create_dir_all(out)?;
    let run = execute(cfg)?;
    let mut report = run.report.clone();
    let mut files = Vec::new();
    let mut open = |name: &str| -> Result<BufWriter<File>> {
        files.push(name.to_string());
        Ok(BufWriter::new(File::create(out.join(name))?))
    };
    if let Some(w) = &run.w {
        write_transition_csv(w, open("W.csv")?)?;
    }
    if let Some(k) = &run.kappa {
        write_kappa_csv(k, &run.labels, open("kappa.csv")?)?;
    }
    if let Some(t) = &run.trajectory {
        let labels: Vec<String> = run.labels.iter().map(ToString::to_string).collect();
        t.write_csv(open("trajectory.csv")?, &labels, &cfg.observables.coherences)?;
        if let Some(table) = &run.observables {
            table.write_csv(&t.times, open("observables.csv")?)?;
            crate::observables::write_temperature_csv(&table.temperature, open("temperature.csv")?)?;
            table.release.write_csv(open("release.csv")?, "t", "release")?;
        }
    }
    if let Some(rel) = &run.dicke_release {
        rel.write_csv(open("dicke_release.csv")?, "t", "release")?;
    }
    if let Some(fit) = &report.fit {
        if let Some(h) = &fit.histogram {
            h.write_csv(open("histogram.csv")?)?;
        }
    }
    files.push("report.json".into());
    report.files = files;
    report.write_json(&out.join("report.json"))?;
    Ok(report)
}
