//! Terms of the averaged heavy-particle equation and their small-`u`
//! singular coefficients.
//!
//! Every term is evaluated from exact closed forms and is expressed in units
//! of `g epsilon^2` with `g = 2 m* / M`. The cross-term coefficient
//! multiplies `d Psi / du` instead.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::binding::BindingPoint;
use crate::error::{Error, Result};
use crate::lightfield::{
    grad_nu_by_quadrature, grad_nu_integral, log_a_first_derivative, log_a_laplacian, p1, p2,
    LightState,
};
use crate::specfun::exp_gamma;
use std::f64::consts::PI;

/// Centrifugal strength used by default for the heavy problem.
pub const BETA2_CLAIMED: f64 = 5.0 / 12.0;

/// Total `1/u^2` coefficient implied by the exact factors (`D -> 2`,
/// `x^3 K_3 -> 8`) term by term: `1/4 - 3/4 + 1/3 - 1/4 + 1/2`.
pub const BETA2_D_LITERAL: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub u: f64,
    pub t1b: f64,
    pub t1c: f64,
    pub t1d: f64,
    pub t2: f64,
    pub t3a: f64,
    pub t3b: f64,
    pub cross_coeff: f64,
}

impl TermBreakdown {
    pub fn new(state: &LightState) -> Self {
        Self {
            u: state.u(),
            t1b: term_1b(state),
            t1c: term_1c(state),
            t1d: term_1d(state),
            t2: term_2(state),
            t3a: term_3a(state),
            t3b: term_3b(state),
            cross_coeff: cross_term_coefficient(state),
        }
    }

    pub fn at(u: f64, tol: f64) -> Result<Self> {
        Ok(Self::new(&LightState::solve(u, tol)?))
    }

    /// Sum of the potential terms (the cross term is excluded).
    pub fn total(&self) -> f64 {
        self.t1b + self.t1c + self.t1d + self.t2 + self.t3a + self.t3b
    }
}

/// Evaluates all terms on a grid; output order matches input.
pub fn breakdown_grid(us: &[f64], tol: f64) -> Result<Vec<TermBreakdown>> {
    us.par_iter().map(|&u| TermBreakdown::at(u, tol)).collect()
}

/// `-A^2 w u w' * overlap = -w^2 u^2 K_1 w' / (2D)`.
pub fn term_1b(state: &LightState) -> f64 {
    let BindingPoint { u, w, dw, .. } = state.point;
    -w * w * u * u * state.k(1) * dw / (2.0 * state.d)
}

/// `-(1/2) (w'/u + w'') p1`.
pub fn term_1c(state: &LightState) -> f64 {
    let BindingPoint { u, dw, d2w, .. } = state.point;
    -0.5 * (dw / u + d2w) * p1(state)
}

/// The two pieces of the `(1_d)` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term1dParts {
    /// `-w'^2 p2 / 2`
    pub p2_piece: f64,
    /// `+w'^2 A^2 J` with `J` the `w`-gradient overlap
    pub j_piece: f64,
}

pub fn term_1d_parts(state: &LightState) -> Term1dParts {
    let dw = state.point.dw;
    Term1dParts {
        p2_piece: -0.5 * dw * dw * p2(state),
        j_piece: dw * dw * state.a2 * grad_nu_integral(state),
    }
}

/// `-w'^2 [p2 / 2 - A^2 J]`.
pub fn term_1d(state: &LightState) -> f64 {
    let parts = term_1d_parts(state);
    parts.p2_piece + parts.j_piece
}

/// [`term_1d`] with `J` taken from the planar quadrature oracle.
pub fn term_1d_by_quadrature(state: &LightState, tol: f64) -> Result<f64> {
    let dw = state.point.dw;
    let j = grad_nu_by_quadrature(state, tol)?.value;
    Ok(-dw * dw * (0.5 * p2(state) - state.a2 * j))
}

/// `-(1/A) nabla^2 A`.
pub fn term_2(state: &LightState) -> f64 {
    -log_a_laplacian(state)
}

/// `-(1/A)(dA/du) w' p1`.
pub fn term_3a(state: &LightState) -> f64 {
    -log_a_first_derivative(state) * state.point.dw * p1(state)
}

/// `2 (1/A)(dA/du) A^2 pi u K_0`.
pub fn term_3b(state: &LightState) -> f64 {
    2.0 * log_a_first_derivative(state) * state.a2 * PI * state.u() * state.k(0)
}

/// The three brackets of the cross-term coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossTermParts {
    /// `2 (1/A) dA/du`
    pub normalization: f64,
    /// `A^2 pi (-2 u K_0)`
    pub fixed_w: f64,
    /// `w' p1`
    pub through_w: f64,
}

impl CrossTermParts {
    pub fn coefficient(&self) -> f64 {
        -(self.normalization + self.fixed_w + self.through_w)
    }
}

pub fn cross_term_parts(state: &LightState) -> CrossTermParts {
    CrossTermParts {
        normalization: 2.0 * log_a_first_derivative(state),
        fixed_w: state.a2 * PI * (-2.0 * state.u() * state.k(0)),
        through_w: state.point.dw * p1(state),
    }
}

/// Coefficient of `d Psi / du`; the three brackets sum to
/// `-d/du int phi^2`, so it vanishes up to rounding.
pub fn cross_term_coefficient(state: &LightState) -> f64 {
    cross_term_parts(state).coefficient()
}

/// Leading effective potential `-2 / (e^gamma u) + g beta2 / u^2` in units
/// of `epsilon^2`.
pub fn v_eff(u: f64, g: f64, beta2: f64) -> f64 {
    -2.0 / (exp_gamma() * u) + g * beta2 / (u * u)
}

/// Location of the minimum of [`v_eff`].
pub fn v_eff_minimum(g: f64, beta2: f64) -> f64 {
    g * beta2 * exp_gamma()
}

/// A fitted small-`u` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffFit {
    pub power: u32,
    pub include_log: bool,
    pub value: f64,
    pub error: f64,
    pub window: (f64, f64),
    pub stable: bool,
}

/// Relative drift between windows above which a fit is flagged.
pub const FIT_STABILITY: f64 = 1e-3;

const FIT_POINTS: usize = 48;

fn fit_once<F>(f: &F, power: u32, include_log: bool, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let us: Vec<f64> = (0..FIT_POINTS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (FIT_POINTS - 1) as f64))
        .collect();
    // Fit u^p f(u) so the target is the constant column.
    let ys: Vec<f64> = us
        .par_iter()
        .map(|&u| f(u).map(|v| v * u.powi(power as i32)))
        .collect::<Result<_>>()?;
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidParams("evaluator is not finite on the fit window".into()));
    }
    let basis = |u: f64| -> Vec<f64> {
        let l = u.ln();
        if include_log {
            vec![1.0, u * l, u, u * u * l * l, u * u * l, u * u]
        } else {
            vec![1.0, u, u * u]
        }
    };
    let cols = basis(1.0).len();
    let mut a = DMatrix::<f64>::zeros(us.len(), cols);
    for (i, &u) in us.iter().enumerate() {
        for (j, b) in basis(u).into_iter().enumerate() {
            a[(i, j)] = b;
        }
    }
    let mut scale = vec![0.0f64; cols];
    for j in 0..cols {
        scale[j] = a.column(j).amax().max(f64::MIN_POSITIVE);
        for i in 0..us.len() {
            a[(i, j)] /= scale[j];
        }
    }
    let b = DVector::from_vec(ys);
    let svd = a.svd(true, true);
    let coef = svd
        .solve(&b, 1e-15)
        .map_err(|e| Error::InvalidParams(format!("least squares failed: {e}")))?;
    Ok(coef[0] / scale[0])
}

/// Fits `f(u) ~ c/u^p + ...` on a log-spaced window and refits on the lower
/// half of the window to estimate the error. The subleading basis carries
/// `ln u` factors when `include_log` is set.
pub fn extract_coeff<F>(f: F, power: u32, include_log: bool, window: (f64, f64)) -> Result<CoeffFit>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi <= 0.1) {
        return Err(Error::InvalidParams(format!(
            "fit window must lie in (0, 0.1], got [{lo}, {hi}]"
        )));
    }
    if power == 0 {
        return Err(Error::InvalidParams("fit power must be positive".into()));
    }
    let full = fit_once(&f, power, include_log, lo, hi)?;
    let shrunk = fit_once(&f, power, include_log, lo, (lo * hi).sqrt())?;
    let error = (full - shrunk).abs();
    Ok(CoeffFit {
        power,
        include_log,
        value: full,
        error,
        window,
        stable: error < FIT_STABILITY * full.abs().max(1.0),
    })
}

/// Which term to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    T1b,
    T1c,
    T1d,
    T1dP2Piece,
    T1dJPiece,
    T2,
    T3a,
    T3b,
    Cross,
    Total,
}

impl Term {
    pub const ALL: [Term; 10] = [
        Term::T1b,
        Term::T1c,
        Term::T1d,
        Term::T1dP2Piece,
        Term::T1dJPiece,
        Term::T2,
        Term::T3a,
        Term::T3b,
        Term::Cross,
        Term::Total,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Term::T1b => "t1b",
            Term::T1c => "t1c",
            Term::T1d => "t1d",
            Term::T1dP2Piece => "t1d_p2_piece",
            Term::T1dJPiece => "t1d_j_piece",
            Term::T2 => "t2",
            Term::T3a => "t3a",
            Term::T3b => "t3b",
            Term::Cross => "cross_coeff",
            Term::Total => "total",
        }
    }

    pub fn eval(&self, state: &LightState) -> f64 {
        match self {
            Term::T1b => term_1b(state),
            Term::T1c => term_1c(state),
            Term::T1d => term_1d(state),
            Term::T1dP2Piece => term_1d_parts(state).p2_piece,
            Term::T1dJPiece => term_1d_parts(state).j_piece,
            Term::T2 => term_2(state),
            Term::T3a => term_3a(state),
            Term::T3b => term_3b(state),
            Term::Cross => cross_term_coefficient(state),
            Term::Total => TermBreakdown::new(state).total(),
        }
    }

    pub fn at(&self, u: f64, tol: f64) -> Result<f64> {
        Ok(self.eval(&LightState::solve(u, tol)?))
    }
}

/// Fits the `1/u^p` coefficient of one term.
pub fn extract_term(term: Term, power: u32, window: (f64, f64), tol: f64) -> Result<CoeffFit> {
    extract_coeff(|u| term.at(u, tol), power, true, window)
}

/// The centrifugal strength fitted from the total, with the claimed and
/// term-by-term values alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSquared {
    pub extracted: CoeffFit,
    pub claimed: f64,
    pub d_literal: f64,
}

pub fn beta_squared(window: (f64, f64), tol: f64) -> Result<BetaSquared> {
    Ok(BetaSquared {
        extracted: extract_term(Term::Total, 2, window, tol)?,
        claimed: BETA2_CLAIMED,
        d_literal: BETA2_D_LITERAL,
    })
}
