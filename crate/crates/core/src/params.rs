//! Physical inputs and the scales derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::exp_gamma;

/// Masses, `hbar` and the one-center scale `epsilon` (`epsilon^2` is the
/// single-center binding energy). Everything else is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub hbar: f64,
    pub epsilon: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, big_m: f64, hbar: f64, epsilon: f64) -> Result<Self> {
        let p = Self {
            m,
            big_m,
            hbar,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Reduced units `hbar = epsilon = 2 m* = 1` with `M / m = ratio`.
    pub fn reduced(mass_ratio: f64) -> Result<Self> {
        if !(mass_ratio >= 1.0) || !mass_ratio.is_finite() {
            return Err(Error::InvalidParams(format!(
                "mass ratio M/m must be finite and >= 1, got {mass_ratio}"
            )));
        }
        // 1/m* = 2 = 1/m + 1/(rho m)
        let m = 0.5 * (1.0 + 1.0 / mass_ratio);
        Self::new(m, mass_ratio * m, 1.0, 1.0)
    }

    /// Builds the light mass from a prescribed reduced mass, so that `M` can
    /// be varied at fixed `m*`.
    pub fn from_reduced_mass(m_star: f64, big_m: f64, hbar: f64, epsilon: f64) -> Result<Self> {
        let inv = 1.0 / m_star - 1.0 / big_m;
        if !(m_star > 0.0) || !(inv > 0.0) {
            return Err(Error::InvalidParams(format!(
                "reduced mass {m_star} is not below heavy mass {big_m}"
            )));
        }
        Self::new(1.0 / inv, big_m, hbar, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.m, self.big_m, self.hbar, self.epsilon];
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "m, M, hbar and epsilon must be finite and positive: {self:?}"
            )));
        }
        if self.big_m < self.m {
            return Err(Error::InvalidParams(format!(
                "heavy mass {} is smaller than light mass {}",
                self.big_m, self.m
            )));
        }
        Ok(())
    }

    pub fn m_star(&self) -> f64 {
        1.0 / (1.0 / self.m + 1.0 / self.big_m)
    }

    /// Light-particle length scale `hbar / (sqrt(2 m*) epsilon)`.
    pub fn zeta0(&self) -> f64 {
        self.hbar / ((2.0 * self.m_star()).sqrt() * self.epsilon)
    }

    /// Strength of the `1/z` attraction, `2 hbar epsilon / (sqrt(2 m*) e^gamma)`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.hbar * self.epsilon / ((2.0 * self.m_star()).sqrt() * exp_gamma())
    }

    /// Heavy-particle length `hbar^2 / (M alpha)`.
    pub fn z0(&self) -> f64 {
        self.hbar * self.hbar / (self.big_m * self.alpha())
    }

    /// `M / (2 m*)`.
    pub fn lambda_ratio(&self) -> f64 {
        self.big_m / (2.0 * self.m_star())
    }

    /// Small parameter `g = 2 m* / M`.
    pub fn g(&self) -> f64 {
        2.0 * self.m_star() / self.big_m
    }

    pub fn mass_ratio(&self) -> f64 {
        self.big_m / self.m
    }

    /// `z0 / (g zeta0)`; equals `e^gamma / 2` identically.
    pub fn z0_over_g_zeta0(&self) -> f64 {
        self.z0() / (self.g() * self.zeta0())
    }

    /// Energy unit `epsilon^2` expressed in the caller's units.
    pub fn energy_unit(&self) -> f64 {
        self.epsilon * self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_units() {
        let p = PhysicalParams::reduced(1000.0).unwrap();
        assert!((2.0 * p.m_star() - 1.0).abs() < 1e-15);
        assert!((p.zeta0() - 1.0).abs() < 1e-15);
        assert!((p.mass_ratio() - 1000.0).abs() < 1e-9);
        assert!((p.g() * p.lambda_ratio() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z0_ratio_is_half_e_gamma() {
        for ratio in [10.0, 1e3, 1e5] {
            let p = PhysicalParams::reduced(ratio).unwrap();
            assert!((p.z0_over_g_zeta0() - 0.5 * exp_gamma()).abs() < 1e-14);
        }
        let p = PhysicalParams::new(0.3, 7.0, 2.5, 0.8).unwrap();
        assert!((p.z0_over_g_zeta0() - 0.5 * exp_gamma()).abs() < 1e-14);
    }

    #[test]
    fn fixed_reduced_mass() {
        let p = PhysicalParams::from_reduced_mass(0.5, 200.0, 1.0, 1.0).unwrap();
        assert!((p.m_star() - 0.5).abs() < 1e-15);
        assert!(PhysicalParams::from_reduced_mass(2.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(PhysicalParams::new(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 2.0, 0.0, 1.0).is_err());
        assert!(PhysicalParams::new(f64::NAN, 2.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::reduced(0.5).is_err());
    }
}
