use std::io::Write;

use serde::{Deserialize, Serialize};

use super::channels::effective_generator;
use super::dynamics::{generator, Superoperator, SuperoperatorKind};
use super::state::DensityMatrix;
use crate::amplitudes::KappaMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, I};

/// Step weight and length of an effective or kicked run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// `g = ε Δt`, the weight of one kick.
    pub g: f64,
    pub steps: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub kick_times: Option<Vec<f64>>,
}

impl EvolutionConfig {
    pub fn uniform(g: f64, steps: usize) -> Self {
        EvolutionConfig {
            g,
            steps,
            epsilon: None,
            kick_times: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) || !self.g.is_finite() {
            return Err(Error::Config(format!("g must be positive, got {}", self.g)));
        }
        if let Some(t) = &self.kick_times {
            check_schedule(t)?;
        }
        Ok(())
    }

    /// Kick times: the explicit schedule, or `g, 2g, ..., steps·g`.
    pub fn schedule(&self) -> Vec<f64> {
        match &self.kick_times {
            Some(t) => t.clone(),
            None => (1..=self.steps).map(|k| k as f64 * self.g).collect(),
        }
    }
}

/// Time-indexed states; index 0 is the initial state.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Number of steps at which tiny negative eigenvalues were clamped.
    pub clamps: usize,
}

impl Trajectory {
    fn start(rho0: &DensityMatrix) -> Self {
        Trajectory {
            times: vec![0.0],
            states: vec![rho0.clone()],
            clamps: 0,
        }
    }

    fn push(&mut self, t: f64, m: CMatrix) -> Result<()> {
        let (rho, clamped) = DensityMatrix::settle(m)?;
        self.clamps += clamped as usize;
        self.times.push(t);
        self.states.push(rho);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectories hold the initial state")
    }

    /// Population of level `k` at every recorded time.
    pub fn population(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.population(k)).collect()
    }

    /// CSV with step, time, populations, the requested coherences (modulus),
    /// trace and smallest eigenvalue.
    pub fn write_csv<W: Write>(&self, out: W, labels: &[String], coherences: &[(usize, usize)]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend(labels.iter().map(|l| format!("p[{l}]")));
        header.extend(coherences.iter().map(|(a, b)| format!("|rho[{a},{b}]|")));
        header.push("trace".into());
        header.push("min_eigenvalue".into());
        w.write_record(&header).map_err(csv_error)?;
        for (k, (t, rho)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![k.to_string(), format!("{t:.12e}")];
            row.extend(rho.populations().iter().map(|p| format!("{p:.15e}")));
            row.extend(
                coherences
                    .iter()
                    .map(|&(a, b)| format!("{:.15e}", rho.matrix()[(a, b)].norm())),
            );
            let check = rho.check();
            row.push(format!("{:.15e}", linalg::trace(rho.matrix()).re));
            row.push(format!("{:.15e}", check.min_eigenvalue));
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// The coherent part of a kicked evolution between kicks.
#[derive(Clone, Debug)]
pub enum Coherent {
    None,
    /// Evolves by `exp(−iHΔt)` over each interval.
    Hamiltonian(CMatrix),
    /// Applies a fixed unitary once per interval.
    Unitary(CMatrix),
    /// Applies a fixed trace-preserving channel once per interval.
    Channel(Superoperator),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KickOrder {
    /// Coherent interval, then the damping kick.
    #[default]
    CoherentFirst,
    KickFirst,
}

/// Alternates coherent intervals with damping kicks `exp(Σ rate·D_R)` at
/// the times in `schedule`, starting from `ρ₀` at `t = 0`.
pub fn evolve_kicked(
    coherent: &Coherent,
    dampers: &[(f64, CMatrix)],
    schedule: &[f64],
    rho0: &DensityMatrix,
    order: KickOrder,
) -> Result<Trajectory> {
    check_schedule(schedule)?;
    let d = rho0.dim();
    let kick = if dampers.is_empty() {
        Superoperator::identity_channel(d)
    } else {
        generator(None, dampers)?.exp(1.0)?
    };
    if kick.dim() != d {
        return Err(Error::Shape("dampers and state dimensions differ".into()));
    }
    let fixed = match coherent {
        Coherent::None => Some(Superoperator::identity_channel(d)),
        Coherent::Hamiltonian(h) => {
            if h.nrows() != d {
                return Err(Error::Shape("Hamiltonian and state dimensions differ".into()));
            }
            generator(Some(h), &[])?;
            None
        }
        Coherent::Unitary(w) => {
            if w.nrows() != d || w.ncols() != d {
                return Err(Error::Shape("unitary and state dimensions differ".into()));
            }
            let defect = linalg::max_abs(&(w.adjoint() * w - linalg::identity(d)));
            if defect > 1e-10 {
                return Err(Error::NotTracePreserving(defect));
            }
            Some(Superoperator::new(
                linalg::sandwich(w, &w.adjoint()),
                SuperoperatorKind::Channel,
            )?)
        }
        Coherent::Channel(u) => {
            let defect = u.trace_defect();
            if u.kind() != SuperoperatorKind::Channel || defect > 1e-10 {
                return Err(Error::NotTracePreserving(defect));
            }
            if u.dim() != d {
                return Err(Error::Shape("channel and state dimensions differ".into()));
            }
            Some(u.clone())
        }
    };

    let mut traj = Trajectory::start(rho0);
    let mut cached: Option<(f64, Superoperator)> = None;
    let mut previous = 0.0;
    for &t in schedule {
        let dt = t - previous;
        previous = t;
        let step = match (&fixed, coherent) {
            (Some(u), _) => u.clone(),
            (None, Coherent::Hamiltonian(h)) => match &cached {
                Some((cdt, u)) if *cdt == dt => u.clone(),
                _ => {
                    let u = Superoperator::new(
                        linalg::sandwich(&linalg::expm(&(h * (-I * c(dt)))), &linalg::expm(&(h * (I * c(dt))))),
                        SuperoperatorKind::Channel,
                    )?;
                    cached = Some((dt, u.clone()));
                    u
                }
            },
            (None, _) => unreachable!("every other coherent part is fixed"),
        };
        let full = match order {
            KickOrder::CoherentFirst => kick.compose(&step)?,
            KickOrder::KickFirst => step.compose(&kick)?,
        };
        let next = full.apply(traj.last().matrix());
        traj.push(t, next)?;
    }
    Ok(traj)
}

/// Iterates `ρ ↦ exp(g Σ κ_nm D_{|n⟩⟨m|}) ρ` for `cfg.steps` steps.
pub fn evolve_effective(kappa: &KappaMatrix, cfg: &EvolutionConfig, rho0: &DensityMatrix) -> Result<Trajectory> {
    cfg.validate()?;
    if kappa.dim() != rho0.dim() {
        return Err(Error::Shape(format!(
            "kappa of dimension {} against a state of dimension {}",
            kappa.dim(),
            rho0.dim()
        )));
    }
    let step = effective_generator(kappa)?.exp(cfg.g)?;
    let mut traj = Trajectory::start(rho0);
    for k in 1..=cfg.steps {
        let next = step.apply(traj.last().matrix());
        traj.push(k as f64 * cfg.g, next)?;
    }
    Ok(traj)
}

fn check_schedule(t: &[f64]) -> Result<()> {
    if t.iter().any(|x| !x.is_finite()) || t.first().is_some_and(|&x| x < 0.0) {
        return Err(Error::Config("kick times must be finite and non-negative".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("kick schedule must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn identity_kappa_keeps_diagonal_states() {
        let rho0 = DensityMatrix::from_populations(&[0.1, 0.6, 0.3]).unwrap();
        let traj = evolve_effective(&KappaMatrix::identity(3), &EvolutionConfig::uniform(0.5, 20), &rho0).unwrap();
        for s in &traj.states {
            assert!(linalg::max_abs(&(s.matrix() - rho0.matrix())) < 1e-14);
        }
    }

    #[test]
    fn single_rate_decays_exponentially() {
        let mut k = DMatrix::zeros(2, 2);
        k[(0, 1)] = 0.7;
        let kappa = KappaMatrix::new(k, Default::default()).unwrap();
        let rho0 = DensityMatrix::from_populations(&[0.25, 0.75]).unwrap();
        let g = 0.3;
        let traj = evolve_effective(&kappa, &EvolutionConfig::uniform(g, 15), &rho0).unwrap();
        for (step, s) in traj.states.iter().enumerate() {
            let want = 0.75 * (-g * 0.7 * step as f64).exp();
            assert!((s.population(1) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn schedule_must_increase() {
        let rho0 = DensityMatrix::basis_state(2, 0);
        let r = evolve_kicked(&Coherent::None, &[], &[1.0, 1.0], &rho0, KickOrder::default());
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn one_kick_with_identity_coherent_part() {
        let dampers = vec![(0.9, linalg::unit(2, 0, 1))];
        let rho0 = DensityMatrix::basis_state(2, 1);
        let traj = evolve_kicked(&Coherent::None, &dampers, &[1.0], &rho0, KickOrder::default()).unwrap();
        let want = generator(None, &dampers)
            .unwrap()
            .exp(1.0)
            .unwrap()
            .apply(rho0.matrix());
        assert!(linalg::max_abs(&(traj.last().matrix() - want)) < 1e-15);
    }
}
