//! The effective radial problem of the heavy relative coordinate.
//!
//! With `r = z / (z0 K)` the s-wave equation reads
//! `R'' + R'/r - beta^2 R / r^2 + K R / r - R / 4 = 0`; normalizable
//! solutions need `K = n + 1/2 + beta` and are `r^beta e^{-r/2} L_n^{2beta}(r)`.
//! Energies are `-(M / 2m*) e^{-2 gamma} / K^2` in units of `epsilon^2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::params::PhysicalParams;
use crate::quad::{integrate_log, Tolerance};
use crate::specfun::{digamma, exp_gamma, laguerre, log_gamma, trigamma, EULER_GAMMA};

/// Start of the outward integration.
pub const R0: f64 = 1e-6;

/// Step of the coarse eigenvalue scan in `K`.
const SCAN_STEP: f64 = 0.05;

fn check_beta2(beta2: f64) -> Result<f64> {
    if !(beta2 >= 0.0) || !beta2.is_finite() {
        return Err(Error::InvalidParams(format!("beta^2 must be finite and >= 0, got {beta2}")));
    }
    Ok(beta2.sqrt())
}

/// `K_n = n + 1/2 + beta`.
pub fn analytic_k(n: usize, beta: f64) -> f64 {
    n as f64 + 0.5 + beta
}

/// `delta E / epsilon^2 = -(M / 2m*) e^{-2 gamma} / K^2`.
pub fn energy_ratio(params: &PhysicalParams, k: f64) -> f64 {
    -params.lambda_ratio() * (-2.0 * EULER_GAMMA).exp() / (k * k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub n: usize,
    pub beta: f64,
    pub k_analytic: f64,
    pub k_shooting: f64,
    /// `delta E_n / epsilon^2` from the analytic `K`.
    pub energy_ratio: f64,
    /// `delta E_n` in the units of `params`.
    pub energy: f64,
    pub discrepancy: f64,
}

/// Level `n` from the quantization rule, confirmed by shooting.
pub fn energy_level(n: usize, params: &PhysicalParams, beta2: f64, tol: f64) -> Result<SpectrumResult> {
    let beta = check_beta2(beta2)?;
    let k_analytic = analytic_k(n, beta);
    let shot = shoot_eigenvalue(n, beta2, tol)?;
    let ratio = energy_ratio(params, k_analytic);
    Ok(SpectrumResult {
        n,
        beta,
        k_analytic,
        k_shooting: shot.k,
        energy_ratio: ratio,
        energy: ratio * params.energy_unit(),
        discrepancy: (shot.k - k_analytic).abs(),
    })
}

/// The separately quoted ground-state line `-(M/2m*) e^{-2gamma} / (1+2beta)^2`,
/// kept only to report how it compares with the level formula at `n = 0`.
pub fn quoted_ground_state_ratio(params: &PhysicalParams, beta: f64) -> f64 {
    -params.lambda_ratio() * (-2.0 * EULER_GAMMA).exp() / (1.0 + 2.0 * beta).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootResult {
    pub k: f64,
    /// Normalized Wronskian at the matching point.
    pub mismatch: f64,
    pub nodes: usize,
    /// `K` interval that was scanned.
    pub window: (f64, f64),
}

struct Shot {
    mismatch: f64,
    nodes: usize,
}

fn shoot(k: f64, beta: f64, n_hint: usize) -> Result<Shot> {
    let b2 = beta * beta;
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], -y[1] / r + (b2 / (r * r) - k / r + 0.25) * y[0]];
    let opts = OdeOptions {
        rtol: 1e-11,
        atol: 1e-30,
        max_steps: 500_000,
    };
    let r_match = (2.0 * k).max(1.0);
    let r_max = 40.0 + 10.0 * n_hint as f64;

    // Frobenius start, scaled by r0^-beta.
    let c1 = -k / (2.0 * beta + 1.0);
    let y0 = [1.0 + c1 * R0, beta / R0 * (1.0 + c1 * R0) + c1];
    let mut nodes = 0;
    let mut last = y0[0];
    let out = ode::integrate(rhs, R0, y0, r_match, opts, |_, y| {
        if (y[0] > 0.0) != (last > 0.0) && y[0] != 0.0 {
            nodes += 1;
        }
        if y[0] != 0.0 {
            last = y[0];
        }
    })?;

    let y_inf = [1.0, (k - 0.5) / r_max - 0.5];
    let mut last = y_inf[0];
    let inw = ode::integrate(rhs, r_max, y_inf, r_match, opts, |_, y| {
        if (y[0] > 0.0) != (last > 0.0) && y[0] != 0.0 {
            nodes += 1;
        }
        if y[0] != 0.0 {
            last = y[0];
        }
    })?;

    let wr = out[1] * inw[0] - out[0] * inw[1];
    let norm = (out[0].hypot(out[1])) * (inw[0].hypot(inw[1]));
    Ok(Shot {
        mismatch: wr / norm,
        nodes,
    })
}

/// Finds `K` for level `n` by shooting from both ends and matching.
pub fn shoot_eigenvalue(n: usize, beta2: f64, tol: f64) -> Result<ShootResult> {
    let beta = check_beta2(beta2)?;
    if !(tol >= 1e-14) {
        return Err(Error::InvalidParams(format!("shooting tolerance {tol} below 1e-14")));
    }
    let lo = 0.01;
    let hi = 2.0 * n as f64 + 4.0 + beta;
    let steps = ((hi - lo) / SCAN_STEP).ceil() as usize;
    let mut prev_k = lo;
    let mut prev = shoot(lo, beta, n)?.mismatch;
    for i in 1..=steps {
        let k = (lo + i as f64 * SCAN_STEP).min(hi);
        let cur = shoot(k, beta, n)?.mismatch;
        if (cur > 0.0) != (prev > 0.0) {
            let root = bisect(prev_k, k, prev, beta, n, tol)?;
            if root.nodes == n {
                return Ok(ShootResult {
                    window: (lo, hi),
                    ..root
                });
            }
        }
        prev = cur;
        prev_k = k;
    }
    Err(Error::Bracket { nodes: n, lo, hi })
}

fn bisect(mut a: f64, mut b: f64, fa: f64, beta: f64, n: usize, tol: f64) -> Result<ShootResult> {
    let mut sa = fa > 0.0;
    let mut mid = 0.5 * (a + b);
    let mut shot = shoot(mid, beta, n)?;
    for _ in 0..200 {
        if b - a < 1e-12 || shot.mismatch.abs() < tol * 1e-3 {
            break;
        }
        if (shot.mismatch > 0.0) == sa {
            a = mid;
            sa = shot.mismatch > 0.0;
        } else {
            b = mid;
        }
        mid = 0.5 * (a + b);
        shot = shoot(mid, beta, n)?;
    }
    Ok(ShootResult {
        k: mid,
        mismatch: shot.mismatch,
        nodes: shot.nodes,
        window: (a, b),
    })
}

/// Sampled radial eigenfunction in the `z` variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialWave {
    pub n: usize,
    pub beta: f64,
    pub k: f64,
    /// Length scale `z0` in the caller's units.
    pub z0: f64,
    /// Normalization with `int 2 pi z Psi^2 dz = 1`.
    pub c_norm: f64,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub psi: Vec<f64>,
}

impl RadialWave {
    /// Sign changes among the samples.
    pub fn node_count(&self) -> usize {
        self.psi
            .windows(2)
            .filter(|p| (p[0] > 0.0) != (p[1] > 0.0) && p[0] != 0.0 && p[1] != 0.0)
            .count()
    }
}

/// `C_n^2 = n! / (2 pi z0^2 K^2 Gamma(n + 2beta + 1) (2n + 2beta + 1))`.
pub fn normalization(n: usize, beta: f64, z0: f64) -> Result<f64> {
    let k = analytic_k(n, beta);
    let ln_fact = log_gamma(n as f64 + 1.0)?;
    let ln_g = log_gamma(n as f64 + 2.0 * beta + 1.0)?;
    let c2 = (ln_fact - ln_g).exp() / (2.0 * PI * z0 * z0 * k * k * (2.0 * n as f64 + 2.0 * beta + 1.0));
    Ok(c2.sqrt())
}

/// `Psi_n(z) = C r^beta e^{-r/2} L_n^{2 beta}(r)` with `r = z / (z0 K)`.
pub fn psi(n: usize, beta: f64, z0: f64, c_norm: f64, z: f64) -> f64 {
    let r = z / (z0 * analytic_k(n, beta));
    c_norm * r.powf(beta) * (-0.5 * r).exp() * laguerre(n, 2.0 * beta, r)
}

/// Samples `Psi_n` on `points` log-spaced values of `r` in `[1e-4, 1]`
/// followed by `points` evenly spaced values up to `40 + 10 n`.
pub fn radial_wavefunction(n: usize, beta2: f64, z0: f64, points: usize) -> Result<RadialWave> {
    let beta = check_beta2(beta2)?;
    if !(z0 > 0.0) {
        return Err(Error::InvalidParams(format!("z0 must be positive, got {z0}")));
    }
    let points = points.max(2);
    let k = analytic_k(n, beta);
    let c_norm = normalization(n, beta, z0)?;
    let r_max = 40.0 + 10.0 * n as f64;
    let mut r: Vec<f64> = (0..points)
        .map(|i| 1e-4 * (1e4f64).powf(i as f64 / (points - 1) as f64))
        .collect();
    r.extend((1..=points).map(|i| 1.0 + (r_max - 1.0) * i as f64 / points as f64));
    let z: Vec<f64> = r.iter().map(|r| r * z0 * k).collect();
    let psi = z.iter().map(|&z| psi(n, beta, z0, c_norm, z)).collect();
    Ok(RadialWave {
        n,
        beta,
        k,
        z0,
        c_norm,
        r,
        z,
        psi,
    })
}

/// `int 2 pi z Psi_n^2 dz` by quadrature.
pub fn norm_by_quadrature(n: usize, beta2: f64, z0: f64) -> Result<f64> {
    let beta = check_beta2(beta2)?;
    let c = normalization(n, beta, z0)?;
    let k = analytic_k(n, beta);
    let hi = z0 * k * (200.0 + 20.0 * n as f64);
    let e = integrate_log(
        |z| 2.0 * PI * z * psi(n, beta, z0, c, z).powi(2),
        z0 * 1e-16,
        hi,
        Tolerance::new(1e-15, 1e-13),
    )?;
    Ok(e.value)
}

/// `<z>` in level `n`: `z0 K (6n^2 + 6n a + 6n + a^2 + 3a + 2) / (2n + a + 1)`
/// with `a = 2 beta`.
pub fn mean_z(n: usize, beta: f64, z0: f64) -> f64 {
    let a = 2.0 * beta;
    let n = n as f64;
    let num = 6.0 * n * n + 6.0 * n * a + 6.0 * n + a * a + 3.0 * a + 2.0;
    z0 * (n + 0.5 + beta) * num / (2.0 * n + a + 1.0)
}

/// `int 2 pi z^2 Psi_n^2 dz` by quadrature.
pub fn mean_z_by_quadrature(n: usize, beta2: f64, z0: f64) -> Result<f64> {
    let beta = check_beta2(beta2)?;
    let c = normalization(n, beta, z0)?;
    let k = analytic_k(n, beta);
    let hi = z0 * k * (200.0 + 20.0 * n as f64);
    let e = integrate_log(
        |z| 2.0 * PI * z * z * psi(n, beta, z0, c, z).powi(2),
        z0 * 1e-16,
        hi,
        Tolerance::new(1e-15 * z0, 1e-13),
    )?;
    Ok(e.value)
}

/// Closed-form moments of the ground-state density `2 pi z Psi_0^2`, a
/// Gamma law with shape `2 beta + 2` and rate `a = 2 / (z0 (1 + 2 beta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundState {
    pub beta: f64,
    /// Length scale `z0`; all lengths share its unit.
    pub z0: f64,
}

impl GroundState {
    pub fn new(beta2: f64, z0: f64) -> Result<Self> {
        let beta = check_beta2(beta2)?;
        if !(z0 > 0.0) || !z0.is_finite() {
            return Err(Error::InvalidParams(format!("z0 must be positive, got {z0}")));
        }
        Ok(Self { beta, z0 })
    }

    /// Ground state of `params` with lengths in units of `zeta0`.
    pub fn from_params(params: &PhysicalParams, beta2: f64) -> Result<Self> {
        Self::new(beta2, params.z0() / params.zeta0())
    }

    pub fn rate(&self) -> f64 {
        2.0 / (self.z0 * (1.0 + 2.0 * self.beta))
    }

    fn shape(&self) -> f64 {
        2.0 * self.beta + 2.0
    }

    pub fn c_norm(&self) -> Result<f64> {
        normalization(0, self.beta, self.z0)
    }

    /// `<z> = (beta + 1)(1 + 2 beta) z0`.
    pub fn expect_z(&self) -> f64 {
        (self.beta + 1.0) * (1.0 + 2.0 * self.beta) * self.z0
    }

    /// `<1/z> = a / (2 beta + 1)`.
    pub fn expect_inv_z(&self) -> f64 {
        self.rate() / (2.0 * self.beta + 1.0)
    }

    /// `<ln(c z)> = psi(2 beta + 2) - ln a + ln c`.
    pub fn expect_log_z(&self, c: f64) -> Result<f64> {
        Ok(digamma(self.shape())? - self.rate().ln() + c.ln())
    }

    /// `<ln^2(c z)> = <ln(c z)>^2 + zeta(2, 2 beta + 2)`.
    pub fn expect_log2_z(&self, c: f64) -> Result<f64> {
        let l = self.expect_log_z(c)?;
        Ok(l * l + trigamma(self.shape())?)
    }

    /// `<ln(c z) / z> = a (psi(2 beta + 1) - ln a + ln c) / (2 beta + 1)`.
    pub fn expect_log_over_z(&self, c: f64) -> Result<f64> {
        Ok(self.expect_inv_z() * (digamma(2.0 * self.beta + 1.0)? - self.rate().ln() + c.ln()))
    }

    /// `Psi_0(z)` with the closed-form normalization.
    pub fn psi(&self, z: f64) -> Result<f64> {
        Ok(psi(0, self.beta, self.z0, self.c_norm()?, z))
    }

    /// `2 pi int z Psi_0^2 f(z) dz` by quadrature.
    pub fn expect_by_quadrature<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let c = self.c_norm()?;
        let (beta, z0) = (self.beta, self.z0);
        let hi = z0 * (1.0 + 2.0 * beta) * 150.0;
        let e = integrate_log(
            |z| 2.0 * PI * z * psi(0, beta, z0, c, z).powi(2) * f(z),
            z0 * 1e-18,
            hi,
            Tolerance::new(1e-16, 1e-13),
        )?;
        Ok(e.value)
    }

    /// `2 pi int g(z) d(Psi_0^2)/dz dz` by quadrature, using the exact
    /// derivative `d Psi_0^2 / dz = Psi_0^2 (2 beta / z - a)`.
    pub fn gradient_moment_by_quadrature<F: FnMut(f64) -> f64>(&self, mut g: F) -> Result<f64> {
        let c = self.c_norm()?;
        let (beta, z0, a) = (self.beta, self.z0, self.rate());
        let hi = z0 * (1.0 + 2.0 * beta) * 150.0;
        let e = integrate_log(
            |z| {
                let p2 = psi(0, beta, z0, c, z).powi(2);
                2.0 * PI * g(z) * p2 * (2.0 * beta / z - a)
            },
            z0 * 1e-18,
            hi,
            Tolerance::new(1e-16, 1e-13),
        )?;
        Ok(e.value)
    }
}

/// `z0 / zeta0 = (e^gamma / 2) (2 m* / M)`.
pub fn z0_in_zeta0(params: &PhysicalParams) -> f64 {
    0.5 * exp_gamma() * params.g()
}

#[cfg(test)]
mod tests {
    use super::*;

    const B2: f64 = 5.0 / 12.0;

    #[test]
    fn analytic_values() {
        let beta = B2.sqrt();
        assert!((beta - 0.645_497_224_4).abs() < 1e-10);
        assert!((analytic_k(0, beta) - 1.145_497_224_4).abs() < 1e-10);
        let p = PhysicalParams::reduced(1e3).unwrap();
        let r = energy_ratio(&p, analytic_k(0, beta)) / energy_ratio(&p, analytic_k(1, beta));
        assert!((r - (1.5 + beta).powi(2) / (0.5 + beta).powi(2)).abs() < 1e-12);
        let quoted = quoted_ground_state_ratio(&p, beta);
        assert!((energy_ratio(&p, analytic_k(0, beta)) / quoted - 4.0).abs() < 1e-12);
    }

    #[test]
    fn shooting_matches_quantization() {
        for b2 in [1.0 / 12.0, B2] {
            for n in 0..4 {
                let s = shoot_eigenvalue(n, b2, 1e-10).unwrap();
                let k = analytic_k(n, b2.sqrt());
                assert!((s.k - k).abs() < 1e-6, "n={n} b2={b2}: {} vs {k}", s.k);
                assert_eq!(s.nodes, n);
            }
        }
    }

    #[test]
    fn coulomb_control() {
        for n in 0..4 {
            let s = shoot_eigenvalue(n, 0.0, 1e-10).unwrap();
            assert!((s.k - (n as f64 + 0.5)).abs() < 1e-6, "n={n}: {}", s.k);
        }
    }

    #[test]
    fn levels_increase() {
        let p = PhysicalParams::reduced(1e3).unwrap();
        let e: Vec<f64> = (0..4)
            .map(|n| energy_level(n, &p, B2, 1e-10).unwrap().energy_ratio)
            .collect();
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn energy_scaling_in_m() {
        let beta = B2.sqrt();
        let k = analytic_k(0, beta);
        let a = PhysicalParams::from_reduced_mass(0.5, 100.0, 1.0, 1.0).unwrap();
        let b = PhysicalParams::from_reduced_mass(0.5, 1e4, 1.0, 1.0).unwrap();
        let sa = energy_ratio(&a, k) * a.g();
        let sb = energy_ratio(&b, k) * b.g();
        assert!((sa - sb).abs() < 1e-13 * sa.abs());
    }

    #[test]
    fn wavefunction_nodes_and_norm() {
        for n in 0..4 {
            let wave = radial_wavefunction(n, B2, 1.0, 400).unwrap();
            assert_eq!(wave.node_count(), n);
            let q = norm_by_quadrature(n, B2, 0.7).unwrap();
            assert!((q - 1.0).abs() < 1e-10, "n={n}: {q}");
        }
        let wave = radial_wavefunction(0, B2, 1.0, 50).unwrap();
        // R ~ r^beta near the origin
        let ratio = wave.psi[1] / wave.psi[0];
        let expect = (wave.r[1] / wave.r[0]).powf(B2.sqrt());
        assert!((ratio / expect - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ground_state_normalization_form() {
        let beta = B2.sqrt();
        let z0 = 0.3;
        let direct = (2.0 / (PI * log_gamma(2.0 * beta + 2.0).unwrap().exp() * z0 * z0 * (1.0 + 2.0 * beta).powi(2))).sqrt();
        assert!((normalization(0, beta, z0).unwrap() - direct).abs() < 1e-14 * direct);
    }

    #[test]
    fn expectations_against_quadrature() {
        let g = GroundState::new(B2, 0.8).unwrap();
        assert!((g.expect_z() / g.z0 - 3.769_82).abs() < 1e-5);
        let c = 0.5 * exp_gamma();
        let q = g.expect_by_quadrature(|z| z).unwrap();
        assert!((q - g.expect_z()).abs() < 1e-10 * g.expect_z(), "{q}");
        let q = g.expect_by_quadrature(|z| 1.0 / z).unwrap();
        assert!((q - g.expect_inv_z()).abs() < 1e-10 * q);
        let q = g.expect_by_quadrature(|z| (c * z).ln()).unwrap();
        assert!((q - g.expect_log_z(c).unwrap()).abs() < 1e-10);
        let q = g.expect_by_quadrature(|z| (c * z).ln().powi(2)).unwrap();
        assert!((q - g.expect_log2_z(c).unwrap()).abs() < 1e-10);
        let q = g.expect_by_quadrature(|z| (c * z).ln() / z).unwrap();
        assert!((q - g.expect_log_over_z(c).unwrap()).abs() < 1e-10);
        let q = g.expect_by_quadrature(|_| 1.0).unwrap();
        assert!((q - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_moment_identities() {
        let g = GroundState::new(B2, 2.0).unwrap();
        let d = g.expect_log_z(3.0).unwrap() - g.expect_log_z(1.0).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-14);
        for c in [0.1, 1.0, 7.0] {
            let var = g.expect_log2_z(c).unwrap() - g.expect_log_z(c).unwrap().powi(2);
            assert!((var - trigamma(2.0 * g.beta + 2.0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn excited_mean_z() {
        for b2 in [0.0, 1.0 / 12.0, B2] {
            let beta = f64::sqrt(b2);
            assert!((mean_z(0, beta, 1.3) - GroundState::new(b2, 1.3).unwrap().expect_z()).abs() < 1e-14);
            for n in 0..5 {
                let q = mean_z_by_quadrature(n, b2, 0.6).unwrap();
                let c = mean_z(n, beta, 0.6);
                assert!((q - c).abs() < 1e-10 * c, "n={n} b2={b2}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn z0_scale() {
        let p = PhysicalParams::reduced(1e3).unwrap();
        assert!((z0_in_zeta0(&p) - p.z0() / p.zeta0()).abs() < 1e-15);
    }
}
