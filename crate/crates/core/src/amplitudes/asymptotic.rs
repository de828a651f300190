use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrices::{KappaMatrix, Normalization};
use crate::error::{Error, Result};

/// Parameters of the large-spin vertex amplitude. The second branch has
/// `N₋ = α·N₊`, so `α` multiplies `e^{−iλγS}` relative to the first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    /// Immirzi parameter `γ_I`.
    pub gamma_i: f64,
    /// Regge action `S_R`.
    pub s_r: f64,
    pub alpha: Complex64,
    /// `|N₊|`.
    pub n_plus_abs: f64,
    /// Phase `Φ_c`; cancels in `|A_v|`.
    #[serde(default)]
    pub phi_c: f64,
    /// `χ + M`, a half-integer; cancels in `|A_v|`.
    #[serde(default)]
    pub chi_m: f64,
}

impl AsymptoticParams {
    pub fn new(gamma_i: f64, s_r: f64, alpha: f64, n_plus_abs: f64) -> Result<Self> {
        let p = AsymptoticParams {
            gamma_i,
            s_r,
            alpha: Complex64::new(alpha, 0.0),
            n_plus_abs,
            phi_c: 0.0,
            chi_m: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_plus_abs > 0.0) {
            return Err(Error::Domain(format!("|N+| = {} must be positive", self.n_plus_abs)));
        }
        Ok(())
    }

    /// `f(λ) = |e^{2iλγ_I S_R} + α|·|N₊|`.
    pub fn f(&self, lambda: f64) -> f64 {
        (Complex64::from_polar(1.0, 2.0 * lambda * self.gamma_i * self.s_r) + self.alpha).norm() * self.n_plus_abs
    }
}

/// `A_v = (−1)^{χ+M} λ⁻¹² e^{iλΦ_c} (N₊ e^{iλγS} + N₋ e^{−iλγS})`.
pub fn asymptotic_vertex(lambda: f64, p: &AsymptoticParams) -> Result<Complex64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    p.validate()?;
    let theta = lambda * p.gamma_i * p.s_r;
    let n_plus = Complex64::new(p.n_plus_abs, 0.0);
    let n_minus = p.alpha * n_plus;
    let branches = n_plus * Complex64::from_polar(1.0, theta) + n_minus * Complex64::from_polar(1.0, -theta);
    let sign = Complex64::from_polar(1.0, std::f64::consts::PI * p.chi_m);
    Ok(sign * Complex64::from_polar(lambda.powi(-12), lambda * p.phi_c) * branches)
}

/// Two-level steady population
/// `ρ₁₁ = λ₁⁴ f(λ₂) / (λ₁⁴ f(λ₂) + λ₂⁴ f(λ₁))`.
pub fn two_level_rho11(lambda1: f64, lambda2: f64, p: &AsymptoticParams) -> Result<f64> {
    if !(lambda1 > 0.0) || !(lambda2 > 0.0) {
        return Err(Error::Domain(format!(
            "lambdas ({lambda1}, {lambda2}) must be positive"
        )));
    }
    p.validate()?;
    let a = lambda1.powi(4) * p.f(lambda2);
    let b = lambda2.powi(4) * p.f(lambda1);
    let total = a + b;
    if total == 0.0 {
        return Err(Error::DegenerateSteadyState("f vanishes at both lambdas".into()));
    }
    if a <= b {
        Ok(a / total)
    } else {
        Ok(1.0 - b / total)
    }
}

/// Two-level rates `κ₁₂ ∝ λ₁⁴ f(λ₂)`, `κ₂₁ ∝ λ₂⁴ f(λ₁)` scaled to sum to
/// one, whose steady state is [`two_level_rho11`].
pub fn two_level_kappa(lambda1: f64, lambda2: f64, p: &AsymptoticParams) -> Result<KappaMatrix> {
    let rho11 = two_level_rho11(lambda1, lambda2, p)?;
    let mut k = DMatrix::zeros(2, 2);
    k[(0, 1)] = rho11;
    k[(1, 0)] = 1.0 - rho11;
    KappaMatrix::new(k, Normalization::OverN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_branch_modulus() {
        let p = AsymptoticParams::new(0.2375, 1.7, 0.0, 3.0).unwrap();
        for lambda in [0.5, 1.0, 2.5] {
            let a = asymptotic_vertex(lambda, &p).unwrap();
            assert!((a.norm() - 3.0 / lambda.powi(12)).abs() <= 1e-14 * a.norm());
        }
        assert!(asymptotic_vertex(0.0, &p).is_err());
    }

    #[test]
    fn quarter_turn_interference() {
        let mut p = AsymptoticParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let lambda = std::f64::consts::FRAC_PI_2;
        let a = asymptotic_vertex(lambda, &p).unwrap();
        let want = (Complex64::from_polar(1.0, std::f64::consts::PI) + 1.0).norm() / lambda.powi(12);
        assert!((a.norm() - want).abs() < 1e-15 / lambda.powi(12));
        p.phi_c += std::f64::consts::PI;
        p.chi_m = 0.5;
        let b = asymptotic_vertex(lambda, &p).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-15);
    }

    #[test]
    fn rho11_examples() {
        let p = AsymptoticParams::new(0.2375, 1.7, 0.0, 1.0).unwrap();
        assert_eq!(two_level_rho11(1.3, 1.3, &p).unwrap(), 0.5);
        assert!((two_level_rho11(1.0, 2.0, &p).unwrap() - 1.0 / 17.0).abs() < 1e-15);
        assert!(two_level_rho11(1e-3, 1.0, &p).unwrap() < 1e-10);
    }
}
