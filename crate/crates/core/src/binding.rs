//! The two-center binding curve.
//!
//! In dimensionless form the light particle's binding `w = nu / epsilon` at
//! heavy separation `u = z / zeta0` solves `ln w = K_0(w u)`. The solver
//! works in `delta = ln w`, where the residual `delta - K_0(u e^delta)` is
//! increasing with slope `D = 1 + x K_1(x)`, `x = w u`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{bessel_k01_unchecked, exp_gamma, EULER_GAMMA};

/// Default residual tolerance for [`solve_w`].
pub const DEFAULT_TOL: f64 = 1e-14;

const MAX_ITER: usize = 300;

/// A solved point of the binding curve with its first two `u` derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BindingPoint {
    pub u: f64,
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
}

impl BindingPoint {
    pub fn solve(u: f64, tol: f64) -> Result<Self> {
        let w = solve_w(u, tol)?;
        Ok(Self::from_solution(u, w))
    }

    /// Fills in derivatives for an already solved `w`.
    pub fn from_solution(u: f64, w: f64) -> Self {
        let (k0, k1) = bessel_k01_unchecked(w * u);
        let x = w * u;
        let d = 1.0 + x * k1;
        let dw = -w * w * k1 / d;
        let d2w = -w * dw * k1 / d - dw / u + w * w * (u * dw + w) * k0 / d * (1.0 - x * k1 / d);
        Self { u, w, dw, d2w }
    }

    /// `x = w u`.
    pub fn x(&self) -> f64 {
        self.w * self.u
    }

    /// `(K_0(x), K_1(x))`.
    pub fn k01(&self) -> (f64, f64) {
        bessel_k01_unchecked(self.x())
    }

    /// `D = 1 + x K_1(x)`.
    pub fn d(&self) -> f64 {
        let x = self.x();
        1.0 + x * bessel_k01_unchecked(x).1
    }

    /// `ln w - K_0(w u)`.
    pub fn residual(&self) -> f64 {
        self.w.ln() - self.k01().0
    }
}

/// Solves `ln w = K_0(w u)` for `w > 1` to residual `tol`.
pub fn solve_w(u: f64, tol: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain {
            func: "solve_w",
            value: u,
            expected: "finite u > 0",
        });
    }
    if !(tol >= 1e-14) {
        return Err(Error::Domain {
            func: "solve_w",
            value: tol,
            expected: "tol >= 1e-14",
        });
    }
    let f = |delta: f64| {
        let x = u * delta.exp();
        let (k0, k1) = bessel_k01_unchecked(x);
        (delta - k0, 1.0 + x * k1)
    };

    let mut lo = (1e-12f64).ln_1p();
    if f(lo).0 >= 0.0 {
        // K_0(u) is already below 1e-12; fall back to w = 1 itself.
        lo = 0.0;
        let (r, _) = f(0.0);
        if r >= 0.0 {
            return Ok(1.0);
        }
    }
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while f(hi).0 <= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Convergence {
                what: "solve_w bracket",
                iterations: doublings,
                lo: lo.exp(),
                hi: hi.exp(),
            });
        }
    }

    // Safeguarded Newton on the bracket [lo, hi].
    let mut delta = 0.5 * (lo + hi);
    let mut step_old = hi - lo;
    let mut step = step_old;
    let (mut r, mut dr) = f(delta);
    for _ in 0..MAX_ITER {
        if r.abs() < tol {
            return Ok(delta.exp());
        }
        if r < 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let newton_leaves = ((delta - hi) * dr - r) * ((delta - lo) * dr - r) > 0.0;
        if newton_leaves || (2.0 * r).abs() > (step_old * dr).abs() {
            step_old = step;
            step = 0.5 * (hi - lo);
            delta = lo + step;
        } else {
            step_old = step;
            step = r / dr;
            delta -= step;
        }
        if hi - lo <= 4.0 * f64::EPSILON * delta.abs().max(1e-300) {
            let (rr, _) = f(delta);
            if rr.abs() < tol.max(8.0 * f64::EPSILON * delta.abs()) {
                return Ok(delta.exp());
            }
            break;
        }
        let next = f(delta);
        r = next.0;
        dr = next.1;
    }
    Err(Error::Convergence {
        what: "solve_w",
        iterations: MAX_ITER,
        lo: lo.exp(),
        hi: hi.exp(),
    })
}

/// Solves every point of a grid in parallel; output order matches input.
pub fn solve_grid(us: &[f64], tol: f64) -> Result<Vec<BindingPoint>> {
    us.par_iter().map(|&u| BindingPoint::solve(u, tol)).collect()
}

/// `dw/du = -w^2 K_1(x) / D`.
pub fn dw_du(point: &BindingPoint) -> f64 {
    let (_, k1) = point.k01();
    -point.w * point.w * k1 / point.d()
}

/// Exact second derivative
/// `-w w' K_1/D - w'/u + w^2 (u w' + w) K_0/D (1 - x K_1/D)`.
pub fn d2w_du2(point: &BindingPoint) -> f64 {
    let (k0, k1) = point.k01();
    let d = point.d();
    let (u, w) = (point.u, point.w);
    let dw = dw_du(point);
    -w * dw * k1 / d - dw / u + w * w * (u * dw + w) * k0 / d * (1.0 - point.x() * k1 / d)
}

/// Small-separation form of `w^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WAsymptotic {
    pub w2: f64,
    /// False when `u` lies outside the window where the expansion is meant
    /// to be used.
    pub in_window: bool,
}

/// `w^2 ~ 2 / (u e^gamma)` at order 0, times `1 - (e^-gamma / 4) u ln u`
/// at order 1.
pub fn w_asymptotic(u: f64, order: u8) -> Result<WAsymptotic> {
    if !(u > 0.0) {
        return Err(Error::Domain {
            func: "w_asymptotic",
            value: u,
            expected: "u > 0",
        });
    }
    let lead = 2.0 / (u * exp_gamma());
    let w2 = match order {
        0 => lead,
        1 => lead * (1.0 - 0.25 * (-EULER_GAMMA).exp() * u * u.ln()),
        _ => {
            return Err(Error::Domain {
                func: "w_asymptotic",
                value: order as f64,
                expected: "order 0 or 1",
            })
        }
    };
    Ok(WAsymptotic {
        w2,
        in_window: u < 0.2,
    })
}

/// Fixed-point iteration of `ln(xi e^gamma / 2) = -(1/4) xi e^-gamma x ln x`
/// from `xi = 2 e^-gamma`.
pub fn xi_iterate(x: f64, iters: usize) -> Result<f64> {
    if !(x > 0.0) || !(x * x.ln().abs() < 1.0) {
        return Err(Error::Domain {
            func: "xi_iterate",
            value: x,
            expected: "x > 0 with x |ln x| < 1",
        });
    }
    let e = (-EULER_GAMMA).exp();
    let xlx = x * x.ln();
    let mut xi = 2.0 * e;
    let mut prev_step = f64::INFINITY;
    for _ in 0..iters {
        let next = 2.0 * e * (-0.25 * xi * e * xlx).exp();
        let step = (next - xi).abs();
        if step > prev_step && step > 1e-15 * xi {
            return Err(Error::NonContraction {
                what: "xi_iterate",
                previous: prev_step,
                current: step,
            });
        }
        prev_step = step;
        xi = next;
    }
    Ok(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain bisection on `[1 + 1e-12, 50]`, independent of the Newton path.
    fn bisection_oracle(u: f64) -> f64 {
        let g = |w: f64| w.ln() - crate::specfun::bessel_k(0, w * u).unwrap();
        let (mut a, mut b) = (1.0 + 1e-12, 50.0);
        assert!(g(a) < 0.0 && g(b) > 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn unit_separation_matches_bisection() {
        let w = solve_w(1.0, 1e-14).unwrap();
        // Frozen from the bisection oracle.
        let oracle = bisection_oracle(1.0);
        assert!((w - oracle).abs() < 1e-12, "{w} vs {oracle}");
        assert!((w - 1.314_009_724_705_374_8).abs() < 1e-13, "{w}");
    }

    #[test]
    fn residual_below_tolerance_on_grid() {
        for u in log_grid(1e-3, 20.0, 200) {
            let p = BindingPoint::solve(u, 1e-14).unwrap();
            assert!(p.residual().abs() < 1e-14, "u={u} res={}", p.residual());
            assert!(p.w > 1.0 || u > 15.0);
            assert!(p.dw < 0.0);
        }
    }

    #[test]
    fn limits() {
        let far = solve_w(60.0, 1e-14).unwrap();
        assert!((far - 1.0).abs() < 1e-20 + 1e-14);
        let u = 1e-8;
        let w = solve_w(u, 1e-14).unwrap();
        assert!((w * w * u * exp_gamma() / 2.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(solve_w(0.0, 1e-12).is_err());
        assert!(solve_w(-1.0, 1e-12).is_err());
        assert!(solve_w(1.0, 1e-16).is_err());
        assert!(w_asymptotic(0.0, 0).is_err());
        assert!(w_asymptotic(0.1, 2).is_err());
        assert!(xi_iterate(0.9, 3).is_ok());
        assert!(xi_iterate(0.0, 3).is_err());
    }

    #[test]
    fn uniqueness_by_scan() {
        for u in log_grid(1e-3, 20.0, 200) {
            let g = |w: f64| w.ln() - crate::specfun::bessel_k(0, w * u).unwrap();
            let w_max = 10.0 * (2.0 / u).sqrt() + 10.0;
            let mut changes = 0;
            let mut prev = g(1.0 + 1e-12);
            for k in 1..=400 {
                let w = 1.0 + 1e-12 + (w_max - 1.0) * k as f64 / 400.0;
                let cur = g(w);
                if (cur > 0.0) != (prev > 0.0) {
                    changes += 1;
                }
                prev = cur;
            }
            assert!(changes <= 1, "u={u}: {changes} sign changes");
        }
    }

    #[test]
    fn monotone_in_u() {
        let pts = solve_grid(&log_grid(1e-3, 20.0, 200), 1e-14).unwrap();
        for p in pts.windows(2) {
            assert!(p[1].w <= p[0].w);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for u in log_grid(0.05, 5.0, 25) {
            let p = BindingPoint::solve(u, 1e-14).unwrap();
            let h = 1e-6 * u.max(0.1);
            let fd1 = (solve_w(u + h, 1e-14).unwrap() - solve_w(u - h, 1e-14).unwrap()) / (2.0 * h);
            assert!(((p.dw - fd1) / p.dw).abs() < 1e-6, "dw at {u}");
            let h2 = 1e-4 * u.max(0.1);
            let fd2 = (solve_w(u + h2, 1e-14).unwrap() - 2.0 * p.w + solve_w(u - h2, 1e-14).unwrap()) / (h2 * h2);
            assert!(((p.d2w - fd2) / p.d2w).abs() < 1e-4, "d2w at {u}: {} vs {fd2}", p.d2w);
            assert_eq!(dw_du(&p), p.dw);
            assert!((d2w_du2(&p) - p.d2w).abs() <= 1e-14 * p.d2w.abs());
        }
    }

    #[test]
    fn derivatives_at_half() {
        let u = 0.5;
        let p = BindingPoint::solve(u, 1e-14).unwrap();
        let h = 1e-6;
        let fd1 = (solve_w(u + h, 1e-14).unwrap() - solve_w(u - h, 1e-14).unwrap()) / (2.0 * h);
        assert!(((p.dw - fd1) / p.dw).abs() < 1e-7);
        let h = 1e-4;
        let fd2 = (solve_w(u + h, 1e-14).unwrap() - 2.0 * p.w + solve_w(u - h, 1e-14).unwrap()) / (h * h);
        assert!(((p.d2w - fd2) / p.d2w).abs() < 1e-5);
    }

    #[test]
    fn leading_derivative_laws() {
        let p = BindingPoint::solve(1e-3, 1e-14).unwrap();
        assert!((p.dw * p.u / p.w + 0.5).abs() < 1e-2);
        assert!((p.d2w * p.u * p.u / p.w - 0.75).abs() < 1e-2);
        assert!(p.d2w > 0.0);
    }

    #[test]
    fn asymptotic_forms() {
        let a = w_asymptotic(0.01, 0).unwrap();
        assert_eq!(a.w2, 2.0 / (0.01 * exp_gamma()));
        assert!(a.in_window);
        assert!(!w_asymptotic(0.3, 1).unwrap().in_window);

        let mut last = f64::INFINITY;
        for u in log_grid(1e-6, 0.05, 40).into_iter().rev() {
            let exact = solve_w(u, 1e-14).unwrap().powi(2);
            let e0 = (w_asymptotic(u, 0).unwrap().w2 - exact).abs();
            let e1 = (w_asymptotic(u, 1).unwrap().w2 - exact).abs();
            assert!(e1 < e0, "order 1 worse at u={u}");
            let rel0 = e0 / exact;
            assert!(rel0 < last, "order 0 error not decreasing at u={u}");
            last = rel0;
        }
    }

    #[test]
    fn leading_rate_is_u_log_u() {
        // (w^2 u e^gamma / 2 - 1) / (u ln u) tends to a constant.
        let ratio = |u: f64| {
            let w = solve_w(u, 1e-14).unwrap();
            (w * w * u * exp_gamma() / 2.0 - 1.0) / (u * u.ln())
        };
        let target = -0.25 * (-EULER_GAMMA).exp();
        let r4 = ratio(1e-4);
        let r8 = ratio(1e-8);
        assert!((r8 - target).abs() < (r4 - target).abs());
        assert!((r8 - target).abs() < 0.2 * target.abs());
    }

    #[test]
    fn xi_iteration() {
        let e = (-EULER_GAMMA).exp();
        assert_eq!(xi_iterate(0.05, 0).unwrap(), 2.0 * e);
        assert!((xi_iterate(1e-12, 5).unwrap() - 2.0 * e).abs() < 1e-10);

        let x: f64 = 0.05;
        let xlx = x * x.ln();
        let g = |xi: f64| (xi * exp_gamma() / 2.0).ln() + 0.25 * xi * e * xlx;
        let (mut a, mut b) = (0.5, 3.0);
        assert!(g(a) < 0.0 && g(b) > 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let xi = xi_iterate(x, 10).unwrap();
        assert!((xi - 0.5 * (a + b)).abs() < 1e-10, "{xi}");
    }
}
