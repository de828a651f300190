//! Collective decay of N qubits through a strongly damped cavity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::lindblad::{generator, DensityMatrix, Superoperator, Trajectory};
use crate::observables::ObservableSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeConfig {
    pub n: usize,
    /// Cavity damping over qubit–cavity coupling.
    pub kappa_over_gamma: f64,
    /// Coupling `γ`; times are in units of `1/γ`.
    #[serde(default = "unit_coupling")]
    pub gamma: f64,
    /// Strictly increasing, starting at or after 0.
    pub times: Vec<f64>,
}

fn unit_coupling() -> f64 {
    1.0
}

impl DickeConfig {
    pub fn new(n: usize, kappa_over_gamma: f64, times: Vec<f64>) -> Result<Self> {
        let cfg = DickeConfig {
            n,
            kappa_over_gamma,
            gamma: 1.0,
            times,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `count` points evenly spaced on `[0, horizon]` in units of `1/Γ_eff`.
    pub fn uniform(n: usize, kappa_over_gamma: f64, horizon: f64, count: usize) -> Result<Self> {
        let gamma_eff = 4.0 / kappa_over_gamma;
        let times = (0..count)
            .map(|k| horizon * k as f64 / (count.max(2) - 1) as f64 / gamma_eff)
            .collect();
        DickeConfig::new(n, kappa_over_gamma, times)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("at least one qubit is required".into()));
        }
        if !(self.kappa_over_gamma > 0.0) || !(self.gamma > 0.0) {
            return Err(Error::Config("kappa and gamma must be positive".into()));
        }
        if self.times.first().is_some_and(|&t| t < 0.0) || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(
                "time grid must be non-negative and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_over_gamma * self.gamma
    }

    /// `Γ_eff = 4γ²/κ`.
    pub fn gamma_eff(&self) -> f64 {
        4.0 * self.gamma * self.gamma / self.kappa()
    }

    pub fn ladder_dim(&self) -> usize {
        self.n + 1
    }
}

/// Ladder operators on `|J = N/2, M⟩`, index `M + J` (0 is the ground state).
pub fn collective_lowering(n: usize) -> CMatrix {
    let j = n as f64 / 2.0;
    let mut s = linalg::zeros(n + 1);
    for k in 1..=n {
        let m = k as f64 - j;
        s[(k - 1, k)] = c(((j + m) * (j - m + 1.0)).sqrt());
    }
    s
}

pub fn collective_sz(n: usize) -> CMatrix {
    let j = n as f64 / 2.0;
    let m: Vec<f64> = (0..=n).map(|k| k as f64 - j).collect();
    linalg::from_real_diagonal(&m)
}

/// A ladder run: states in the Dicke basis and `⟨S_z⟩` against `Γ_eff·t`.
#[derive(Clone, Debug)]
pub struct DickeRun {
    pub trajectory: Trajectory,
    pub sz: ObservableSeries,
}

impl DickeRun {
    /// `−d⟨S_z⟩/dτ` by forward difference on the rescaled grid.
    pub fn release(&self) -> Result<ObservableSeries> {
        let (x, y) = (&self.sz.x, &self.sz.y);
        if x.len() < 2 {
            return Err(Error::Domain("release needs at least two points".into()));
        }
        let r = x
            .windows(2)
            .zip(y.windows(2))
            .map(|(t, s)| (s[0] - s[1]) / (t[1] - t[0]))
            .collect();
        ObservableSeries::new(x[..x.len() - 1].to_vec(), r)
    }
}

fn ladder_state(cfg: &DickeConfig, initial: &DensityMatrix) -> Result<()> {
    if initial.dim() != cfg.ladder_dim() {
        return Err(Error::OutsideLadder(format!(
            "state of dimension {} for a ladder of {} levels",
            initial.dim(),
            cfg.ladder_dim()
        )));
    }
    Ok(())
}

fn run(l: &Superoperator, times: &[f64], rho0: &DensityMatrix) -> Result<Vec<CMatrix>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = rho0.matrix().clone();
    let mut previous = 0.0;
    let mut cached: Option<(f64, Superoperator)> = None;
    for &t in times {
        let dt = t - previous;
        if dt > 0.0 {
            let step = match cached.take() {
                Some((cdt, u)) if (cdt - dt).abs() <= 1e-12 * dt => u,
                _ => l.exp(dt)?,
            };
            current = step.apply(&current);
            cached = Some((dt, step));
        }
        previous = t;
        out.push(current.clone());
    }
    Ok(out)
}

/// Evolves `dρ/dt = Γ_eff D_{S₋}[ρ]` on the symmetric ladder.
pub fn dicke_cascade(cfg: &DickeConfig, initial: &DensityMatrix) -> Result<DickeRun> {
    cfg.validate()?;
    ladder_state(cfg, initial)?;
    let l = generator(None, &[(cfg.gamma_eff(), collective_lowering(cfg.n))])?;
    let sz = collective_sz(cfg.n);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        clamps: 0,
    };
    let mut values = Vec::new();
    for (t, m) in cfg.times.iter().zip(run(&l, &cfg.times, initial)?) {
        let (rho, clamped) = DensityMatrix::settle(m)?;
        traj.clamps += clamped as usize;
        values.push(linalg::trace(&(rho.matrix() * &sz)).re);
        traj.times.push(*t);
        traj.states.push(rho);
    }
    let x = cfg.times.iter().map(|t| t * cfg.gamma_eff()).collect();
    Ok(DickeRun {
        sz: ObservableSeries::new(x, values)?,
        trajectory: traj,
    })
}

/// `⟨S_z⟩` of the qubits coupled by `γ(a†S₋ + aS₊)` to a cavity with decay
/// `κ D_a`, truncated to `photons` levels and started in vacuum.
pub fn cavity_model(cfg: &DickeConfig, initial: &DensityMatrix, photons: usize) -> Result<ObservableSeries> {
    cfg.validate()?;
    ladder_state(cfg, initial)?;
    if photons < 2 {
        return Err(Error::Config("the cavity needs at least two levels".into()));
    }
    let mut a = linalg::zeros(photons);
    for k in 1..photons {
        a[(k - 1, k)] = c((k as f64).sqrt());
    }
    let s = collective_lowering(cfg.n);
    let ip = linalg::identity(photons);
    let iq = linalg::identity(cfg.ladder_dim());
    let a_full = linalg::kron(&iq, &a);
    let s_full = linalg::kron(&s, &ip);
    let h = (a_full.adjoint() * &s_full + &a_full * s_full.adjoint()) * c(cfg.gamma);
    let l = generator(Some(&h), &[(cfg.kappa(), a_full)])?;
    let vacuum = linalg::unit(photons, 0, 0);
    let rho0 = DensityMatrix::new(linalg::kron(initial.matrix(), &vacuum))?;
    let sz = linalg::kron(&collective_sz(cfg.n), &ip);
    let values = run(&l, &cfg.times, &rho0)?
        .iter()
        .map(|m| linalg::trace(&(m * &sz)).re)
        .collect();
    let x = cfg.times.iter().map(|t| t * cfg.gamma_eff()).collect();
    ObservableSeries::new(x, values)
}

/// L2 distance between two non-negative curves, each divided by its own
/// trapezoid integral, on the union of their grids within the overlap.
pub fn compare_curves(a: &ObservableSeries, b: &ObservableSeries) -> Result<f64> {
    for s in [a, b] {
        let top = s.y.iter().copied().fold(0.0, f64::max);
        if s.y.iter().any(|&v| v < -1e-12 * top.max(1.0)) {
            return Err(Error::Domain("curves must be non-negative".into()));
        }
    }
    let (ia, ib) = (a.integral(), b.integral());
    if !(ia > 0.0) || !(ib > 0.0) {
        return Err(Error::ZeroIntegral);
    }
    let lo = a.x[0].max(b.x[0]);
    let hi = a.x[a.len() - 1].min(b.x[b.len() - 1]);
    if !(hi > lo) {
        return Err(Error::Domain("curves do not overlap".into()));
    }
    let mut grid: Vec<f64> =
        a.x.iter()
            .chain(&b.x)
            .copied()
            .filter(|&t| t >= lo && t <= hi)
            .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let diff: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let d = a.at(t).unwrap_or(0.0) / ia - b.at(t).unwrap_or(0.0) / ib;
            d * d
        })
        .collect();
    Ok(ObservableSeries::new(grid, diff)?.integral().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_decays_exponentially() {
        let cfg = DickeConfig::uniform(1, 40.0, 5.0, 21).unwrap();
        let run = dicke_cascade(&cfg, &DensityMatrix::basis_state(2, 1)).unwrap();
        for (t, rho) in run.trajectory.times.iter().zip(&run.trajectory.states) {
            assert!((rho.population(1) - (-cfg.gamma_eff() * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn ladder_operators() {
        let s = collective_lowering(2);
        assert!((s[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((s[(0, 1)].re - 2f64.sqrt()).abs() < 1e-15);
        let comm = linalg::commutator(&s.adjoint(), &s);
        assert!(linalg::max_abs(&(comm - collective_sz(2) * c(2.0))) < 1e-14);
    }

    #[test]
    fn outside_ladder() {
        let cfg = DickeConfig::uniform(2, 40.0, 1.0, 3).unwrap();
        assert!(matches!(
            dicke_cascade(&cfg, &DensityMatrix::basis_state(4, 0)),
            Err(Error::OutsideLadder(_))
        ));
    }

    #[test]
    fn compare_is_scale_invariant() {
        let a = ObservableSeries::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.5, 0.1]).unwrap();
        let b = ObservableSeries::new(a.x.clone(), a.y.iter().map(|v| 3.0 * v).collect()).unwrap();
        assert!(compare_curves(&a, &a).unwrap() < 1e-15);
        assert!(compare_curves(&a, &b).unwrap() < 1e-15);
        let z = ObservableSeries::new(a.x.clone(), vec![0.0; 4]).unwrap();
        assert!(matches!(compare_curves(&a, &z), Err(Error::ZeroIntegral)));
    }

    #[test]
    fn bad_cavity_matches_effective_decay() {
        let cfg = DickeConfig::uniform(2, 40.0, 8.0, 81).unwrap();
        let rho0 = DensityMatrix::basis_state(3, 2);
        let eff = dicke_cascade(&cfg, &rho0).unwrap().sz;
        let full = cavity_model(&cfg, &rho0, 3).unwrap();
        let sup = eff
            .y
            .iter()
            .zip(&full.y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 0.05);
    }
}
