//! First-order corrections to the ground-state energy.
//!
//! Lengths are in units of `zeta0`, energies in `epsilon^2`. The logarithms
//! carry the scale `c = e^gamma / 2`, i.e. `ln(c u)` with `u = z / zeta0`;
//! with `a = 2 / (z0 (1 + 2 beta))` the recurring combination is
//! `L = ln c - ln a = ln(g (1 + 2 beta) e^{2 gamma} / 8)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::heavy::GroundState;
use crate::params::PhysicalParams;
use crate::specfun::{digamma, exp_gamma, trigamma, EULER_GAMMA};

/// Agreement required between a closed form and its quadrature twin.
pub const AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    BindingLog,
    A1,
    B,
    C,
    Mixed1,
    Mixed2,
}

impl Correction {
    pub const ALL: [Correction; 6] = [
        Correction::BindingLog,
        Correction::A1,
        Correction::B,
        Correction::C,
        Correction::Mixed1,
        Correction::Mixed2,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Correction::BindingLog => "binding_log",
            Correction::A1 => "a1",
            Correction::B => "b",
            Correction::C => "c",
            Correction::Mixed1 => "mixed1",
            Correction::Mixed2 => "mixed2",
        }
    }

    /// Leading order in `(m*/M, ln(M/m*))`.
    pub fn order(&self) -> &'static str {
        match self {
            Correction::BindingLog | Correction::B | Correction::Mixed1 => "ln(M/m*)",
            Correction::A1 => "1",
            Correction::C | Correction::Mixed2 => "(m*/M) ln^2(M/m*)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionReport {
    pub label: &'static str,
    pub closed: f64,
    pub quadrature: f64,
    pub order: &'static str,
    /// Scale `c` inside `ln(c u)`.
    pub log_scale: f64,
    /// Half the expectation of `f'` for a mixed term `f d/du`, i.e. the
    /// amount by which symmetrizing the operator would shift it.
    pub anticommutator: Option<f64>,
}

impl CorrectionReport {
    pub fn agrees(&self) -> bool {
        (self.closed - self.quadrature).abs() <= AGREEMENT * self.closed.abs().max(1.0)
    }
}

/// The scale `c = e^gamma / 2` used inside every logarithm.
pub fn log_scale() -> f64 {
    0.5 * exp_gamma()
}

fn e2g() -> f64 {
    (2.0 * EULER_GAMMA).exp()
}

/// Closed forms and quadrature twins for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Corrections {
    pub ground: GroundState,
    pub g: f64,
}

impl Corrections {
    pub fn new(params: &PhysicalParams, beta2: f64) -> Result<Self> {
        Ok(Self {
            ground: GroundState::from_params(params, beta2)?,
            g: params.g(),
        })
    }

    fn big_l(&self) -> f64 {
        let b = self.ground.beta;
        (self.g * (1.0 + 2.0 * b) * e2g() / 8.0).ln()
    }

    fn one_plus_2b_sq(&self) -> f64 {
        (1.0 + 2.0 * self.ground.beta).powi(2)
    }

    /// `<ln(c u)> / (2 e^{2 gamma})`.
    pub fn binding_log(&self) -> Result<f64> {
        let b = self.ground.beta;
        Ok((digamma(2.0 * b + 2.0)? + self.big_l()) / (2.0 * e2g()))
    }

    /// `g <2 / (e^gamma u)> = 8 / (e^{2 gamma} (1 + 2 beta)^2)`.
    pub fn a1(&self) -> f64 {
        8.0 / (e2g() * self.one_plus_2b_sq())
    }

    /// `(g / e^gamma) <ln(c u) / u>`.
    pub fn b(&self) -> Result<f64> {
        let b = self.ground.beta;
        Ok(4.0 / (e2g() * self.one_plus_2b_sq()) * (digamma(2.0 * b + 1.0)? + self.big_l()))
    }

    /// `(g / e^{2 gamma}) <ln^2(c u)>`.
    pub fn c(&self) -> Result<f64> {
        let b = self.ground.beta;
        let l = digamma(2.0 * b + 2.0)? + self.big_l();
        Ok(self.g / e2g() * (l * l + trigamma(2.0 * b + 2.0)?))
    }

    /// `-(g / (2 e^gamma)) [<1/u> + <ln(c u) / u>]`.
    pub fn mixed1(&self) -> Result<f64> {
        let b = self.ground.beta;
        Ok(-2.0 / (e2g() * self.one_plus_2b_sq()) * (1.0 + digamma(2.0 * b + 1.0)? + self.big_l()))
    }

    /// `(g / (4 e^{2 gamma})) [<ln(c u)> + <ln^2(c u)>]`.
    pub fn mixed2(&self) -> Result<f64> {
        let c = log_scale();
        let l1 = self.ground.expect_log_z(c)?;
        let l2 = self.ground.expect_log2_z(c)?;
        Ok(self.g / (4.0 * e2g()) * (l1 + l2))
    }

    pub fn closed(&self, which: Correction) -> Result<f64> {
        match which {
            Correction::BindingLog => self.binding_log(),
            Correction::A1 => Ok(self.a1()),
            Correction::B => self.b(),
            Correction::C => self.c(),
            Correction::Mixed1 => self.mixed1(),
            Correction::Mixed2 => self.mixed2(),
        }
    }

    /// Direct quadrature over the ground-state density (for the mixed terms,
    /// over `d Psi^2 / du` before integrating by parts).
    pub fn quadrature(&self, which: Correction) -> Result<f64> {
        let c = log_scale();
        let g = self.g;
        let gs = &self.ground;
        match which {
            Correction::BindingLog => {
                Ok(gs.expect_by_quadrature(|u| (c * u).ln())? / (2.0 * e2g()))
            }
            Correction::A1 => Ok(g * gs.expect_by_quadrature(|u| 2.0 / (exp_gamma() * u))?),
            Correction::B => Ok(g / exp_gamma() * gs.expect_by_quadrature(|u| (c * u).ln() / u)?),
            Correction::C => Ok(g / e2g() * gs.expect_by_quadrature(|u| (c * u).ln().powi(2))?),
            Correction::Mixed1 => {
                Ok(g / (2.0 * exp_gamma()) * gs.gradient_moment_by_quadrature(|u| u * (c * u).ln())?)
            }
            Correction::Mixed2 => Ok(-g / (8.0 * e2g())
                * gs.gradient_moment_by_quadrature(|u| u * u * (c * u).ln().powi(2))?),
        }
    }

    /// `(1/2) <f'>` for the mixed terms, by quadrature.
    pub fn anticommutator(&self, which: Correction) -> Result<Option<f64>> {
        let c = log_scale();
        let g = self.g;
        let gs = &self.ground;
        match which {
            Correction::Mixed1 => Ok(Some(0.5 * g / exp_gamma() * gs.expect_by_quadrature(|u| 1.0 / u)?)),
            Correction::Mixed2 => Ok(Some(
                -0.5 * g / (4.0 * e2g())
                    * gs.expect_by_quadrature(|u| {
                        let l = (c * u).ln();
                        l * l + 2.0 * l
                    })?,
            )),
            _ => Ok(None),
        }
    }

    pub fn report(&self, which: Correction) -> Result<CorrectionReport> {
        Ok(CorrectionReport {
            label: which.label(),
            closed: self.closed(which)?,
            quadrature: self.quadrature(which)?,
            order: which.order(),
            log_scale: log_scale(),
            anticommutator: self.anticommutator(which)?,
        })
    }

    /// All six reports, in fixed order.
    pub fn reports(&self) -> Result<Vec<CorrectionReport>> {
        Correction::ALL.par_iter().map(|&w| self.report(w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy::{analytic_k, energy_ratio};

    const B2: f64 = 5.0 / 12.0;

    fn corr(ratio: f64) -> Corrections {
        Corrections::new(&PhysicalParams::reduced(ratio).unwrap(), B2).unwrap()
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for ratio in [1e2, 1e3, 1e4] {
            for r in corr(ratio).reports().unwrap() {
                assert!(r.agrees(), "{r:?}");
            }
        }
    }

    #[test]
    fn closed_forms_match_moments() {
        let k = corr(1e3);
        let c = log_scale();
        let gs = &k.ground;
        let g = k.g;
        let e = exp_gamma();
        let b = g / e * gs.expect_log_over_z(c).unwrap();
        assert!((b - k.b().unwrap()).abs() < 1e-12 * b.abs());
        let a1 = g * 2.0 / e * gs.expect_inv_z();
        assert!((a1 - k.a1()).abs() < 1e-12 * a1);
        let bl = gs.expect_log_z(c).unwrap() / (2.0 * e * e);
        assert!((bl - k.binding_log().unwrap()).abs() < 1e-12 * bl.abs());
        let cc = g / (e * e) * gs.expect_log2_z(c).unwrap();
        assert!((cc - k.c().unwrap()).abs() < 1e-12 * cc);
        let m1 = -g / (2.0 * e) * (gs.expect_inv_z() + gs.expect_log_over_z(c).unwrap());
        assert!((m1 - k.mixed1().unwrap()).abs() < 1e-12 * m1.abs());
    }

    #[test]
    fn hierarchy_at_thousand() {
        let p = PhysicalParams::reduced(1e3).unwrap();
        let k = Corrections::new(&p, B2).unwrap();
        let e0 = energy_ratio(&p, analytic_k(0, B2.sqrt())).abs();
        let c = k.c().unwrap().abs();
        let a1 = k.a1().abs();
        let b = k.b().unwrap().abs();
        assert!(c < a1 && a1 < b && b < e0, "{c} {a1} {b} {e0}");
        assert!(k.binding_log().unwrap().abs() < e0);
        assert!(k.c().unwrap() > 0.0);
    }

    #[test]
    fn a1_independent_of_mass() {
        let a = corr(1e2).a1();
        let b = corr(1e5).a1();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn doubling_mass_shifts_binding_log() {
        let m_star = 0.5;
        let p1 = PhysicalParams::from_reduced_mass(m_star, 500.0, 1.0, 1.0).unwrap();
        let p2 = PhysicalParams::from_reduced_mass(m_star, 1000.0, 1.0, 1.0).unwrap();
        let d = Corrections::new(&p2, B2).unwrap().binding_log().unwrap()
            - Corrections::new(&p1, B2).unwrap().binding_log().unwrap();
        assert!((d + 2f64.ln() / (2.0 * e2g())).abs() < 1e-13);
    }

    #[test]
    fn large_mass_limits() {
        let m_star = 0.5;
        let ratio = 1e60;
        let p = PhysicalParams::from_reduced_mass(m_star, ratio * m_star, 1.0, 1.0).unwrap();
        let k = Corrections::new(&p, B2).unwrap();
        let lm = ratio.ln();
        let s = (1.0 + 2.0 * B2.sqrt()).powi(2);
        let r = k.binding_log().unwrap() / (-lm / (2.0 * e2g()));
        assert!((r - 1.0).abs() < 2e-2, "{r}");
        let r = k.b().unwrap() / (-4.0 * lm / (e2g() * s));
        assert!((r - 1.0).abs() < 2e-2, "{r}");
        let r = k.mixed1().unwrap() / (2.0 * lm / (e2g() * s));
        assert!((r - 1.0).abs() < 2e-2, "{r}");
        assert!(k.c().unwrap() < 1e-50);
        assert!(k.mixed2().unwrap().abs() < 1e-50);
    }
}
