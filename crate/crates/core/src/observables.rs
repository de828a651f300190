//! Area, energy, energy release, spectral temperature and thermal-time
//! diagnostics.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::amplitudes::ReducedLabel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::lindblad::{DensityMatrix, Trajectory};
use crate::spin::Spin;

/// `8πγ_I √(j(j+1))`, Planck units.
pub fn area(j: Spin, gamma_i: f64) -> f64 {
    8.0 * PI * gamma_i * j.casimir().sqrt()
}

/// Energies `E = λ_E Σ_l √(j_l(j_l+1))` of the reduced basis states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergySpectrum {
    pub labels: Vec<ReducedLabel>,
    pub energies: Vec<f64>,
    pub scale: f64,
    /// Basis indices sorted by increasing energy.
    pub order: Vec<usize>,
}

impl EnergySpectrum {
    pub fn new(labels: Vec<ReducedLabel>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("energy scale {scale} must be positive")));
        }
        let energies: Vec<f64> = labels
            .iter()
            .map(|l| scale * l.0.iter().map(|j| j.casimir().sqrt()).sum::<f64>())
            .collect();
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        if order.windows(2).any(|w| energies[w[1]] <= energies[w[0]]) {
            return Err(Error::Domain("energy levels must be non-degenerate".into()));
        }
        Ok(EnergySpectrum {
            labels,
            energies,
            scale,
            order,
        })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Values against an increasing abscissa.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!("{} abscissae for {} values", x.len(), y.len())));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("series abscissae must be strictly increasing".into()));
        }
        Ok(ObservableSeries { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trapezoid integral.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Linear interpolation; `None` outside the covered range.
    pub fn at(&self, t: f64) -> Option<f64> {
        let last = *self.x.last()?;
        if t < self.x[0] || t > last {
            return None;
        }
        let k = self.x.partition_point(|&x| x <= t);
        if k == 0 {
            return Some(self.y[0]);
        }
        if k == self.x.len() {
            return Some(self.y[k - 1]);
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        Some(self.y[k - 1] * (1.0 - w) + self.y[k] * w)
    }

    pub fn write_csv<W: Write>(&self, out: W, x_name: &str, y_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([x_name, y_name]).map_err(crate::lindblad::csv_error)?;
        for (x, y) in self.x.iter().zip(&self.y) {
            w.write_record([format!("{x:.12e}"), format!("{y:.15e}")])
                .map_err(crate::lindblad::csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(crate::lindblad::csv_error)?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: k + 2,
                        msg: format!("column {i} is not a number"),
                    })
            };
            x.push(field(0)?);
            y.push(field(1)?);
        }
        ObservableSeries::new(x, y)
    }
}

/// Diagonal energy operator in the basis order.
pub fn energy_operator(spec: &EnergySpectrum) -> CMatrix {
    linalg::from_real_diagonal(&spec.energies)
}

/// `⟨Ê⟩` at every trajectory point.
pub fn mean_energy(traj: &Trajectory, spec: &EnergySpectrum) -> Vec<f64> {
    traj.states
        .iter()
        .map(|s| s.populations().iter().zip(&spec.energies).map(|(p, e)| p * e).sum())
        .collect()
}

/// Forward difference `S_k = (⟨Ê⟩_k − ⟨Ê⟩_{k+1}) / g`, placed at `x = k·g`.
pub fn energy_release(traj: &Trajectory, spec: &EnergySpectrum, g: f64) -> Result<ObservableSeries> {
    if traj.len() < 2 {
        return Err(Error::Domain("energy release needs at least two states".into()));
    }
    if traj.dim() != spec.dim() {
        return Err(Error::Shape("spectrum and trajectory dimensions differ".into()));
    }
    let e = mean_energy(traj, spec);
    let y: Vec<f64> = e.windows(2).map(|w| (w[0] - w[1]) / g).collect();
    let x: Vec<f64> = (0..y.len()).map(|k| k as f64 * g).collect();
    ObservableSeries::new(x, y)
}

/// Inverse temperature and temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Temperature {
    pub beta: f64,
    /// `1/β`; infinite when `β = 0`.
    pub t: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TemperatureOptions {
    /// Replace zero populations by `1e-300` instead of failing.
    pub floor_zero_populations: bool,
}

/// Spectral temperature
/// `β = −(1 − (p₁+p_N)/2)⁻¹ Σ_{i≥2} ((p_i+p_{i−1})/2) ln(p_i/p_{i−1}) / (E_i−E_{i−1})`
/// with levels in increasing energy.
pub fn spectral_temperature(
    rho: &DensityMatrix,
    spec: &EnergySpectrum,
    opts: TemperatureOptions,
) -> Result<Temperature> {
    let d = spec.dim();
    if rho.dim() != d {
        return Err(Error::Shape("spectrum and state dimensions differ".into()));
    }
    if d < 2 {
        return Err(Error::UndefinedTemperature("a single level has no temperature".into()));
    }
    let m = rho.matrix();
    let off = (0..d)
        .flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| m[(a, b)].norm())
        .fold(0.0, f64::max);
    if off > 1e-8 {
        return Err(Error::UndefinedTemperature(format!(
            "state is not diagonal in the energy basis (coherence {off:.3e})"
        )));
    }
    let p: Vec<f64> = spec
        .order
        .iter()
        .map(|&k| {
            let x = rho.population(k).max(0.0);
            if opts.floor_zero_populations {
                x.max(1e-300)
            } else {
                x
            }
        })
        .collect();
    let e: Vec<f64> = spec.order.iter().map(|&k| spec.energies[k]).collect();
    let mut sum = 0.0;
    for i in 1..d {
        if p[i] == 0.0 || p[i - 1] == 0.0 {
            return Err(Error::UndefinedTemperature(format!(
                "zero population among levels {} and {}",
                spec.order[i - 1],
                spec.order[i]
            )));
        }
        sum += 0.5 * (p[i] + p[i - 1]) * (p[i] / p[i - 1]).ln() / (e[i] - e[i - 1]);
    }
    let weight = 1.0 - 0.5 * (p[0] + p[d - 1]);
    if weight <= 0.0 {
        return Err(Error::UndefinedTemperature("end levels hold all the population".into()));
    }
    let beta = -sum / weight;
    Ok(Temperature {
        beta,
        t: if beta == 0.0 { f64::INFINITY } else { 1.0 / beta },
    })
}

/// Temperature at every trajectory point; `None` where it is undefined.
pub fn temperature_series(
    traj: &Trajectory,
    spec: &EnergySpectrum,
    opts: TemperatureOptions,
) -> Vec<Option<Temperature>> {
    traj.states
        .iter()
        .map(|rho| spectral_temperature(rho, spec, opts).ok())
        .collect()
}

/// CSV with `step, beta, T`; undefined points are written as `nan`.
pub fn write_temperature_csv<W: Write>(series: &[Option<Temperature>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "beta", "T"])
        .map_err(crate::lindblad::csv_error)?;
    for (k, t) in series.iter().enumerate() {
        let (b, tt) = t.map_or((f64::NAN, f64::NAN), |t| (t.beta, t.t));
        w.write_record([k.to_string(), format!("{b:.15e}"), format!("{tt:.15e}")])
            .map_err(crate::lindblad::csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares fit `ln p = −β E + c`; returns `β` and the largest
/// residual in `ln p`.
pub fn gibbs_fit(rho: &DensityMatrix, spec: &EnergySpectrum) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = (0..spec.dim()).map(|k| (spec.energies[k], rho.population(k))).collect();
    if pts.iter().any(|&(_, p)| p <= 0.0) {
        return Err(Error::UndefinedTemperature("zero population".into()));
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(e, p)| (a + e, b + p.ln()));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|&(e, _)| (e - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|&(e, p)| (e - mx) * (p.ln() - my)).sum();
    let slope = sxy / sxx;
    let resid = pts
        .iter()
        .map(|&(e, p)| (p.ln() - (my + slope * (e - mx))).abs())
        .fold(0.0, f64::max);
    Ok((-slope, resid))
}

/// Flow-invariance residual `‖e^{isK} ρ e^{−isK} − ρ‖` and `‖[K, ρ]‖` for
/// the thermal Hamiltonian `K = −ln ρ` on the support of `ρ` (Frobenius
/// norms).
pub fn thermal_flow_check(rho: &DensityMatrix, s: f64) -> Result<(f64, f64)> {
    let (values, vectors) = linalg::hermitian_eigen(rho.matrix());
    let top = values.iter().copied().fold(0.0, f64::max);
    let support = |x: f64| x > 1e-12 * top.max(f64::MIN_POSITIVE);
    if !values.iter().any(|&x| support(x)) {
        return Err(Error::Domain("state has empty support".into()));
    }
    let k_vals: Vec<f64> = values.iter().map(|&x| if support(x) { -x.ln() } else { 0.0 }).collect();
    let k = linalg::from_eigen(&k_vals, &vectors);
    let phases: Vec<num_complex::Complex64> = values
        .iter()
        .zip(&k_vals)
        .map(|(&x, &kv)| {
            if support(x) {
                num_complex::Complex64::from_polar(1.0, s * kv)
            } else {
                c(1.0)
            }
        })
        .collect();
    let u = &vectors * CMatrix::from_diagonal(&linalg::CVector::from_vec(phases)) * vectors.adjoint();
    let rho_m = rho.matrix();
    let flowed = &u * rho_m * u.adjoint();
    Ok((
        linalg::frobenius(&(flowed - rho_m)),
        linalg::frobenius(&linalg::commutator(&k, rho_m)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder(twice: &[u32]) -> Vec<ReducedLabel> {
        twice
            .iter()
            .map(|&t| ReducedLabel::single(Spin::from_twice(t)))
            .collect()
    }

    #[test]
    fn area_examples() {
        assert_eq!(area(Spin::ZERO, 1.0), 0.0);
        assert!((area(Spin::HALF, 1.0) - 4.0 * PI * 3f64.sqrt()).abs() < 1e-12);
        for t in 0..40 {
            assert!(area(Spin::from_twice(t + 1), 0.3) > area(Spin::from_twice(t), 0.3));
        }
    }

    #[test]
    fn energy_operator_is_diagonal() {
        let spec = EnergySpectrum::new(ladder(&[2]), 1.5).unwrap();
        assert!((energy_operator(&spec)[(0, 0)].re - 1.5 * 2f64.sqrt()).abs() < 1e-15);
        let spec = EnergySpectrum::new(ladder(&[1, 2, 3]), 1.0).unwrap();
        let e = energy_operator(&spec);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(e[(a, b)], c(0.0));
                }
            }
        }
        let mixed = DensityMatrix::maximally_mixed(3);
        let mean = linalg::trace(&(mixed.matrix() * &e)).re;
        assert!((mean - spec.energies.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_level_gibbs_temperature() {
        let spec = EnergySpectrum::new(ladder(&[1, 3]), 1.0).unwrap();
        let beta0 = 0.8;
        let de = spec.energies[1] - spec.energies[0];
        let z = 1.0 + (-beta0 * de).exp();
        let rho = DensityMatrix::from_populations(&[1.0 / z, (-beta0 * de).exp() / z]).unwrap();
        let t = spectral_temperature(&rho, &spec, Default::default()).unwrap();
        assert!((t.beta - beta0).abs() < 1e-10);
        let equal = DensityMatrix::maximally_mixed(2);
        assert_eq!(
            spectral_temperature(&equal, &spec, Default::default()).unwrap().beta,
            0.0
        );
        let inverted = DensityMatrix::from_populations(&[0.2, 0.8]).unwrap();
        assert!(spectral_temperature(&inverted, &spec, Default::default()).unwrap().beta < 0.0);
        let empty = DensityMatrix::from_populations(&[1.0, 0.0]).unwrap();
        assert!(spectral_temperature(&empty, &spec, Default::default()).is_err());
        let floored = TemperatureOptions {
            floor_zero_populations: true,
        };
        assert!(spectral_temperature(&empty, &spec, floored).unwrap().beta > 0.0);
    }

    #[test]
    fn thermal_flow_of_maximally_mixed() {
        let (flow, comm) = thermal_flow_check(&DensityMatrix::maximally_mixed(4), 2.3).unwrap();
        assert!(flow < 1e-14 && comm < 1e-14);
        let (flow, comm) = thermal_flow_check(&DensityMatrix::basis_state(3, 1), 0.7).unwrap();
        assert!(flow < 1e-14 && comm < 1e-14);
    }

    #[test]
    fn series_interpolation_and_integral() {
        let s = ObservableSeries::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.integral(), 5.0);
        assert_eq!(s.at(0.5), Some(1.0));
        assert_eq!(s.at(2.0), Some(2.0));
        assert_eq!(s.at(3.5), None);
        assert!(ObservableSeries::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
