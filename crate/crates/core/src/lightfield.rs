//! The normalized light-particle state around two fixed centers.
//!
//! With centers `c± = (±u/2, 0)` and `eta± = K_0(w |x - c±|)`, the state is
//! `phi = A (eta+ + eta-)` with `A^2 = w^2 / (2 pi D)`. Lengths are in units
//! of `zeta0`, `w` in units of `epsilon`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::binding::BindingPoint;
use crate::error::{Error, Result};
use crate::quad::{quad2d_two_center, Estimate, QuadSpec, TwoCenterPoint};
use crate::specfun::{bessel_k01_unchecked, bessel_k_all_unchecked};

/// Default absolute tolerance of the quadrature oracles.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LightState {
    pub point: BindingPoint,
    /// `1 + x K_1(x)`.
    pub d: f64,
    /// `A^2 = w^2 / (2 pi D)`.
    pub a2: f64,
    k: [f64; 4],
}

impl LightState {
    pub fn new(point: BindingPoint) -> Self {
        let x = point.w * point.u;
        let k = bessel_k_all_unchecked(x);
        let d = 1.0 + x * k[1];
        let a2 = point.w * point.w / (2.0 * PI * d);
        Self { point, d, a2, k }
    }

    pub fn solve(u: f64, tol: f64) -> Result<Self> {
        Ok(Self::new(BindingPoint::solve(u, tol)?))
    }

    pub fn u(&self) -> f64 {
        self.point.u
    }

    pub fn w(&self) -> f64 {
        self.point.w
    }

    pub fn x(&self) -> f64 {
        self.point.w * self.point.u
    }

    /// `K_n(x)` for `n = 0..=3`.
    pub fn k(&self, n: usize) -> f64 {
        self.k[n]
    }

    /// Distances to `c+` and `c-`.
    fn radii(&self, p: [f64; 2]) -> (f64, f64) {
        let h = 0.5 * self.u();
        (
            (p[0] - h).hypot(p[1]),
            (p[0] + h).hypot(p[1]),
        )
    }
}

/// `phi(p) = sqrt(A^2) [K_0(w r+) + K_0(w r-)]`.
pub fn phi(p: [f64; 2], state: &LightState) -> Result<f64> {
    let (rp, rm) = state.radii(p);
    if rp == 0.0 || rm == 0.0 {
        return Err(Error::Domain {
            func: "phi",
            value: p[0],
            expected: "a point away from both centers",
        });
    }
    Ok(phi_unchecked(p, state))
}

fn phi_unchecked(p: [f64; 2], state: &LightState) -> f64 {
    let (rp, rm) = state.radii(p);
    let w = state.w();
    state.a2.sqrt() * (bessel_k01_unchecked(w * rp).0 + bessel_k01_unchecked(w * rm).0)
}

/// `int eta+ eta- d^2x = pi (u / w) K_1(x)`.
pub fn overlap_integral(state: &LightState) -> f64 {
    PI * state.u() / state.w() * state.k(1)
}

/// `int [d_w (eta+ + eta-)]^2 d^2x = (4 pi / (3 w^4)) [2 + x^3 K_3(x) / 4]`.
pub fn grad_nu_integral(state: &LightState) -> f64 {
    let x = state.x();
    let w = state.w();
    4.0 * PI / (3.0 * w.powi(4)) * (2.0 + 0.25 * x.powi(3) * state.k(3))
}

/// `A^2 d_w (A^-2) = -2/w - w u^2 K_0 / D`.
pub fn p1(state: &LightState) -> f64 {
    let (u, w) = (state.u(), state.w());
    -2.0 / w - w * u * u * state.k(0) / state.d
}

/// `A^2 d_w^2 (A^-2) = 6/w^2 + 3 u^2 K_0 / D + w u^3 K_1 / D`.
pub fn p2(state: &LightState) -> f64 {
    let (u, w) = (state.u(), state.w());
    6.0 / (w * w) + 3.0 * u * u * state.k(0) / state.d + w * u.powi(3) * state.k(1) / state.d
}

/// `(1/A) dA/du = w'/w + (1/2) w u (u w' + w) K_0 / D`.
pub fn log_a_first_derivative(state: &LightState) -> f64 {
    let (u, w, dw) = (state.u(), state.w(), state.point.dw);
    dw / w + 0.5 * w * u * (u * dw + w) * state.k(0) / state.d
}

/// The five summands of `(1/A) d^2A/du^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondDerivativeParts {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
}

impl SecondDerivativeParts {
    pub fn sum(&self) -> f64 {
        self.s1 + self.s2 + self.s3 + self.s4 + self.s5
    }
}

/// Summands of `(1/A) d^2A/du^2`, with `y = u w' + w = dx/du`:
///
/// - `s1 = w''/w`
/// - `s2 = (1/2) w' u y K_0 / D`
/// - `s3 = (1/2) w' u y / D`
/// - `s4 = (1/2) K_0 [2 u^2 w'^2 + 5 w u w' + w u^2 w'' + w^2] / D`
/// - `s5 = (3/4) x^2 y^2 K_0^2 / D^2`
pub fn second_derivative_parts(state: &LightState) -> SecondDerivativeParts {
    let BindingPoint { u, w, dw, d2w } = state.point;
    let d = state.d;
    let k0 = state.k(0);
    let x = state.x();
    let y = u * dw + w;
    SecondDerivativeParts {
        s1: d2w / w,
        s2: 0.5 * dw * u * y * k0 / d,
        s3: 0.5 * dw * u * y / d,
        s4: 0.5 * k0 * (2.0 * u * u * dw * dw + 5.0 * w * u * dw + w * u * u * d2w + w * w) / d,
        s5: 0.75 * x * x * y * y * k0 * k0 / (d * d),
    }
}

/// `(1/A) nabla_u^2 A = (1/A) A'' + (1/u)(1/A) A'` (planar radial Laplacian).
pub fn log_a_laplacian(state: &LightState) -> f64 {
    second_derivative_parts(state).sum() + log_a_first_derivative(state) / state.u()
}

/// Planar integral of `f` with the two log-singular centers of `state`.
pub fn quad2d<F>(f: F, state: &LightState, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(&TwoCenterPoint) -> f64 + Sync,
{
    quad2d_two_center(f, state.u(), spec)
}

fn oracle_spec(state: &LightState, tol: f64) -> Result<QuadSpec> {
    QuadSpec::for_decay(state.w(), state.u(), tol)
}

fn eta_pair(state: &LightState, p: &TwoCenterPoint) -> ((f64, f64), (f64, f64)) {
    let w = state.w();
    (bessel_k01_unchecked(w * p.r_plus), bessel_k01_unchecked(w * p.r_minus))
}

/// `int phi^2 d^2x` by quadrature.
pub fn norm_by_quadrature(state: &LightState, tol: f64) -> Result<Estimate> {
    let spec = oracle_spec(state, tol)?;
    quad2d(
        |p| {
            let ((k0p, _), (k0m, _)) = eta_pair(state, p);
            state.a2 * (k0p + k0m).powi(2)
        },
        state,
        &spec,
    )
}

/// `int eta+ eta- d^2x` by quadrature.
pub fn overlap_by_quadrature(state: &LightState, tol: f64) -> Result<Estimate> {
    let spec = oracle_spec(state, tol)?;
    quad2d(
        |p| {
            let ((k0p, _), (k0m, _)) = eta_pair(state, p);
            k0p * k0m
        },
        state,
        &spec,
    )
}

/// `d_w (eta+ + eta-) = -r+ K_1(w r+) - r- K_1(w r-)`.
fn d_w_eta(p: &TwoCenterPoint, k1p: f64, k1m: f64) -> f64 {
    -p.r_plus * k1p - p.r_minus * k1m
}

/// `int [r+ K_1(w r+) + r- K_1(w r-)]^2 d^2x` by quadrature.
pub fn grad_nu_by_quadrature(state: &LightState, tol: f64) -> Result<Estimate> {
    let spec = oracle_spec(state, tol)?;
    quad2d(
        |p| {
            let ((_, k1p), (_, k1m)) = eta_pair(state, p);
            d_w_eta(p, k1p, k1m).powi(2)
        },
        state,
        &spec,
    )
}

/// `(int phi d_x phi, int phi d_y phi)` by quadrature; both vanish.
pub fn exact_differential_by_quadrature(state: &LightState, tol: f64) -> Result<[Estimate; 2]> {
    let spec = oracle_spec(state, tol)?;
    let w = state.w();
    let grad = |p: &TwoCenterPoint| {
        let ((k0p, k1p), (k0m, k1m)) = eta_pair(state, p);
        let phi2 = state.a2 * (k0p + k0m);
        let gx = -w * (k1p * p.dx_plus / p.r_plus + k1m * p.dx_minus / p.r_minus);
        let gy = -w * p.y * (k1p / p.r_plus + k1m / p.r_minus);
        (phi2 * gx, phi2 * gy)
    };
    let ex = quad2d(|p| grad(p).0, state, &spec)?;
    let ey = quad2d(|p| grad(p).1, state, &spec)?;
    Ok([ex, ey])
}

/// Sub-integrals of `2 int phi (d phi / du) d^2x`, each by quadrature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossTermQuadrature {
    /// `2 A^2 int eta (d_u eta at fixed w)`.
    pub fixed_w: Estimate,
    /// `2 A^2 w' int eta d_w eta`.
    pub through_w: Estimate,
    /// `2 (1/A) dA/du int phi^2`.
    pub normalization: Estimate,
}

impl CrossTermQuadrature {
    /// `-2 int phi d_u phi`.
    pub fn coefficient(&self) -> f64 {
        -(self.fixed_w.value + self.through_w.value + self.normalization.value)
    }

    pub fn error(&self) -> f64 {
        self.fixed_w.error + self.through_w.error + self.normalization.error
    }
}

pub fn cross_term_by_quadrature(state: &LightState, tol: f64) -> Result<CrossTermQuadrature> {
    let spec = oracle_spec(state, tol)?;
    let w = state.w();
    let a2 = state.a2;
    let dw = state.point.dw;
    let fixed_w = quad2d(
        |p| {
            let ((k0p, k1p), (k0m, k1m)) = eta_pair(state, p);
            let du_eta = w * k1p * p.dx_plus / (2.0 * p.r_plus) - w * k1m * p.dx_minus / (2.0 * p.r_minus);
            2.0 * a2 * (k0p + k0m) * du_eta
        },
        state,
        &spec,
    )?;
    let through_w = quad2d(
        |p| {
            let ((k0p, k1p), (k0m, k1m)) = eta_pair(state, p);
            2.0 * a2 * dw * (k0p + k0m) * d_w_eta(p, k1p, k1m)
        },
        state,
        &spec,
    )?;
    let norm = norm_by_quadrature(state, tol)?;
    let la = 2.0 * log_a_first_derivative(state);
    Ok(CrossTermQuadrature {
        fixed_w,
        through_w,
        normalization: Estimate {
            value: la * norm.value,
            error: la.abs() * norm.error,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(u: f64) -> LightState {
        LightState::solve(u, 1e-14).unwrap()
    }

    #[test]
    fn normalization_identity() {
        for u in [1e-3, 0.1, 0.5, 1.0, 5.0, 20.0] {
            let s = state(u);
            let lhs = 2.0 * s.a2 * (PI / (s.w() * s.w())) * s.d;
            assert!((lhs - 1.0).abs() < 1e-15, "u={u}");
            assert!(s.d > 1.0 && s.a2 > 0.0);
        }
    }

    #[test]
    fn phi_symmetry_and_decay() {
        let s = state(0.8);
        for (a, b) in [(0.1, 0.2), (1.3, -0.7), (3.0, 2.0)] {
            let l = phi([a, b], &s).unwrap();
            let r = phi([-a, b], &s).unwrap();
            assert!((l - r).abs() <= 1e-15 * l.abs());
        }
        assert!(phi([30.0, 0.0], &s).unwrap() < 1e-10);
        assert!(phi([0.4, 0.0], &s).is_err());
    }

    #[test]
    fn overlap_limits() {
        let s = state(30.0);
        assert!(overlap_integral(&s) < 1e-10);
        let s = state(1e-6);
        assert!((s.a2 * overlap_integral(&s) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn grad_nu_limits() {
        let s = state(1e-6);
        let bracket = grad_nu_integral(&s) * 3.0 * s.w().powi(4) / (4.0 * PI);
        assert!((bracket - 4.0).abs() < 1e-5);
        let s = state(20.0);
        let bracket = grad_nu_integral(&s) * 3.0 * s.w().powi(4) / (4.0 * PI);
        assert!((bracket - 2.0).abs() < 1e-5);
    }

    /// `1/A^2 = 2 pi D / w^2` as a function of `w` at fixed `u`.
    fn inv_a2(u: f64, w: f64) -> f64 {
        let x = w * u;
        2.0 * PI * (1.0 + x * bessel_k01_unchecked(x).1) / (w * w)
    }

    #[test]
    fn p1_p2_match_differences_in_w() {
        for u in [0.05, 0.5, 1.0, 3.0] {
            let s = state(u);
            let w = s.w();
            let h = 1e-6;
            let fd1 = ((inv_a2(u, w + h)).ln() - (inv_a2(u, w - h)).ln()) / (2.0 * h);
            assert!(((p1(&s) - fd1) / p1(&s)).abs() < 1e-6, "p1 at {u}");
            let h = 1e-4;
            let fd2 = (inv_a2(u, w + h) - 2.0 * inv_a2(u, w) + inv_a2(u, w - h)) / (h * h) / inv_a2(u, w);
            assert!(((p2(&s) - fd2) / p2(&s)).abs() < 1e-5, "p2 at {u}");
            assert!(p2(&s) > 0.0);
        }
        let s = state(1e-4);
        assert!((p1(&s) * s.w() + 2.0).abs() < 1e-2);
        assert!((p2(&s) * s.w() * s.w() - 6.0).abs() < 5e-2);
        let s = state(40.0);
        assert!((p1(&s) + 2.0 / s.w()).abs() < 1e-12);
    }

    /// `ln A(u)` along the binding curve.
    fn log_a(u: f64) -> f64 {
        0.5 * state(u).a2.ln()
    }

    #[test]
    fn log_a_first_derivative_matches_differences() {
        for u in [0.05, 0.5, 1.0, 4.0] {
            let s = state(u);
            let h = 1e-5 * u;
            let fd = (log_a(u + h) - log_a(u - h)) / (2.0 * h);
            let v = log_a_first_derivative(&s);
            assert!(((v - fd) / v).abs() < 1e-6, "u={u}: {v} vs {fd}");
        }
        let s = state(1e-5);
        assert!((s.u() * log_a_first_derivative(&s) + 0.5).abs() < 1e-2);
        assert!(log_a_first_derivative(&state(0.01)) < 0.0);
    }

    #[test]
    fn laplacian_matches_differences() {
        let a = |u: f64| state(u).a2.sqrt();
        for u in [0.05, 0.5, 2.0] {
            let s = state(u);
            let h = 1e-4 * u.max(0.1);
            let d2 = (a(u + h) - 2.0 * a(u) + a(u - h)) / (h * h) / a(u);
            let parts = second_derivative_parts(&s).sum();
            assert!(((parts - d2) / d2).abs() < 1e-4, "u={u}: {parts} vs {d2}");
            let d1 = (a(u + h) - a(u - h)) / (2.0 * h) / a(u);
            let lap = d2 + d1 / u;
            let v = log_a_laplacian(&s);
            assert!(((v - lap) / lap).abs() < 1e-4, "u={u}");
        }
    }

    #[test]
    fn laplacian_small_u_and_continuity() {
        let s = state(1e-6);
        let v = s.u() * s.u() * log_a_laplacian(&s);
        assert!((v - 0.25).abs() < 1e-2, "{v}");
        let s2 = s.u() * s.u() * second_derivative_parts(&s).sum();
        assert!((s2 - 0.75).abs() < 1e-2);
        // one sign change at most, and no jumps on the grid
        let vals: Vec<f64> = (0..200)
            .map(|i| {
                let u = 0.01 * 500f64.powf(i as f64 / 199.0);
                log_a_laplacian(&state(u))
            })
            .collect();
        let changes = vals.windows(2).filter(|p| (p[0] > 0.0) != (p[1] > 0.0)).count();
        assert!(changes <= 1, "{changes} sign changes");
        assert!(vals.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for u in [0.2, 0.5, 1.0, 2.0, 5.0] {
            let s = state(u);
            let n = norm_by_quadrature(&s, ORACLE_TOL).unwrap();
            assert!((n.value - 1.0).abs() < 1e-8, "norm at {u}: {n:?}");
            let o = overlap_by_quadrature(&s, ORACLE_TOL).unwrap();
            let c = overlap_integral(&s);
            assert!((o.value - c).abs() < 1e-8 && (o.value - c).abs() <= o.error.max(1e-9), "overlap at {u}: {o:?} vs {c}");
            let g = grad_nu_by_quadrature(&s, ORACLE_TOL).unwrap();
            let c = grad_nu_integral(&s);
            assert!((g.value - c).abs() < 1e-7, "grad at {u}: {g:?} vs {c}");
        }
    }

    #[test]
    fn gradient_of_phi_squared_integrates_to_zero() {
        let s = state(0.7);
        let [ex, ey] = exact_differential_by_quadrature(&s, ORACLE_TOL).unwrap();
        assert!(ex.value.abs() < 1e-9, "{ex:?}");
        assert!(ey.value.abs() < 1e-9, "{ey:?}");
    }

    #[test]
    fn cross_term_pieces_by_quadrature() {
        let s = state(1.0);
        let q = cross_term_by_quadrature(&s, ORACLE_TOL).unwrap();
        let fixed_w = s.a2 * PI * (-2.0 * s.u() * s.k(0));
        let through_w = s.point.dw * p1(&s);
        assert!((q.fixed_w.value - fixed_w).abs() < 1e-7, "{q:?} vs {fixed_w}");
        assert!((q.through_w.value - through_w).abs() < 1e-7, "{q:?} vs {through_w}");
        assert!(q.coefficient().abs() < 1e-6);
    }
}
