//! Adaptive Gauss–Kronrod quadrature (7/15 pair) and a two-center polar
//! integrator for planar fields with logarithmic singularities.
//!
//! Subintervals are refined worst-first from a heap, and the final sum runs
//! in left-to-right order, so results do not depend on evaluation order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Stopping rule for the 1D adaptive rule.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_intervals: 2000,
        }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 2000,
        }
    }

    fn accepts(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    (value, error)
}

#[derive(Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_breaks(f, &[a, b], tol)
}

/// Adaptive integral over `[points[0], points.last()]`, with the inner points
/// used as initial subdivision boundaries.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::InvalidParams("integration needs at least two points".into()));
    }
    let mut heap = BinaryHeap::new();
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b > a {
            let (value, error) = gk15(&mut f, a, b);
            heap.push(Piece { a, b, value, error });
        }
    }
    let totals = |heap: &BinaryHeap<Piece>| {
        let mut pieces: Vec<&Piece> = heap.iter().collect();
        pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        (value, error)
    };
    // Running sums drive the stopping test; the reported value is re-summed
    // in interval order.
    let mut run_value: f64 = heap.iter().map(|p| p.value).sum();
    let mut run_error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        if !run_value.is_finite() {
            return Err(Error::Quadrature {
                estimate: run_value,
                error_bound: run_error,
            });
        }
        if tol.accepts(run_value, run_error) {
            let (value, error) = totals(&heap);
            if tol.accepts(value, error) {
                return Ok(Estimate { value, error });
            }
            run_value = value;
            run_error = error;
        }
        if heap.len() >= tol.max_intervals {
            let (value, error) = totals(&heap);
            return Err(Error::Quadrature {
                estimate: value,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            heap.push(worst);
            let (value, error) = totals(&heap);
            return Err(Error::Quadrature {
                estimate: value,
                error_bound: error,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        run_value += v1 + v2 - worst.value;
        run_error += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

/// `int_lo^hi f(t) dt` evaluated as `int f(e^s) e^s ds`, which resolves
/// integrands spread over many decades of `t > 0`.
pub fn integrate_log<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParams(format!(
            "log-mapped integral needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (s0, s1) = (lo.ln(), hi.ln());
    let n = ((s1 - s0) / 2.0).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| s0 + (s1 - s0) * i as f64 / n as f64).collect();
    integrate_breaks(
        |s| {
            let t = s.exp();
            f(t) * t
        },
        &breaks,
        tol,
    )
}

/// Settings of the two-center planar integrator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadSpec {
    /// Radius of the disk integrated around each center.
    pub cutoff: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadSpec {
    /// A spec for integrands decaying like `exp(-2 w r)`, with the cutoff
    /// placed where the tail drops below `abs_tol`.
    pub fn for_decay(w: f64, u: f64, abs_tol: f64) -> Result<Self> {
        if !(w > 0.0) {
            return Err(Error::InvalidParams(format!("decay rate must be positive, got {w}")));
        }
        let tol = abs_tol.max(1e-12);
        let cutoff = u + ((1.0 / tol).ln() + 12.0) / (2.0 * w);
        let spec = Self {
            cutoff,
            abs_tol: tol,
            max_subdivisions: 4000,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 1e-12) {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerance {} is below 1e-12",
                self.abs_tol
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidParams(format!("bad cutoff {}", self.cutoff)));
        }
        if self.max_subdivisions < 4 {
            return Err(Error::InvalidParams("subdivision limit too small".into()));
        }
        Ok(())
    }
}

/// A sample point of the two-center integrator. Offsets from each center
/// are formed directly from the local polar coordinates, so they keep full
/// relative precision close to either center.
#[derive(Debug, Clone, Copy)]
pub struct TwoCenterPoint {
    pub x: f64,
    pub y: f64,
    /// `x - u/2`
    pub dx_plus: f64,
    /// `x + u/2`
    pub dx_minus: f64,
    /// `|p - c+|`
    pub r_plus: f64,
    /// `|p - c-|`
    pub r_minus: f64,
}

/// Integral over the plane of a field with (at worst logarithmic)
/// singularities at `c+ = (u/2, 0)` and `c- = (-u/2, 0)`.
///
/// The field is split with the partition of unity
/// `chi+ = r-^2 / (r+^2 + r-^2)`, `chi- = 1 - chi+`; each part is integrated
/// in polar coordinates about its own center, where the Jacobian removes the
/// singularity and the weight suppresses the other one. Angular ranges are
/// cut at the direction of the opposite center.
pub fn quad2d_two_center<F>(f: F, u: f64, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(&TwoCenterPoint) -> f64 + Sync,
{
    spec.validate()?;
    if !(u > 0.0) {
        return Err(Error::InvalidParams(format!("center separation must be positive, got {u}")));
    }
    let f = &f;
    let (plus, minus) = rayon::join(|| polar_piece(f, u, true, spec), || polar_piece(f, u, false, spec));
    let plus = plus?;
    let minus = minus?;
    Ok(Estimate {
        value: plus.value + minus.value,
        error: plus.error + minus.error,
    })
}

fn polar_piece<F>(f: &F, u: f64, about_plus: bool, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(&TwoCenterPoint) -> f64,
{
    let r_cut = spec.cutoff;
    let half = 0.5 * u;
    let theta_other = if about_plus { PI } else { 0.0 };
    let inner_tol = Tolerance {
        abs: 0.05 * spec.abs_tol / r_cut,
        rel: 1e-14,
        max_intervals: spec.max_subdivisions,
    };
    let outer_tol = Tolerance {
        abs: 0.4 * spec.abs_tol,
        rel: 0.0,
        max_intervals: spec.max_subdivisions,
    };
    let sample = |rho: f64, t: f64| {
        let (s, c) = t.sin_cos();
        let (dx, y) = (rho * c, rho * s);
        if about_plus {
            let dx_minus = u + dx;
            TwoCenterPoint {
                x: half + dx,
                y,
                dx_plus: dx,
                dx_minus,
                r_plus: rho,
                r_minus: dx_minus.hypot(y),
            }
        } else {
            let dx_plus = dx - u;
            TwoCenterPoint {
                x: dx - half,
                y,
                dx_plus,
                dx_minus: dx,
                r_plus: dx_plus.hypot(y),
                r_minus: rho,
            }
        }
    };
    let mut inner_err = 0.0f64;
    let mut failure: Option<Error> = None;
    let mut radial = |rho: f64| {
        if failure.is_some() {
            return 0.0;
        }
        let theta = [theta_other - PI, theta_other, theta_other + PI];
        let ang = integrate_breaks(
            |t: f64| {
                let p = sample(rho, t);
                let (own, other) = if about_plus {
                    (p.r_plus, p.r_minus)
                } else {
                    (p.r_minus, p.r_plus)
                };
                let (o2, m2) = (own * own, other * other);
                m2 / (o2 + m2) * f(&p)
            },
            &theta,
            inner_tol,
        );
        match ang {
            Ok(e) => {
                inner_err = inner_err.max(e.error);
                rho * e.value
            }
            Err(err) => {
                failure = Some(err);
                0.0
            }
        }
    };
    let mut breaks = vec![0.0, 0.25 * u, u, 2.0 * u, r_cut];
    breaks.retain(|&b| b <= r_cut);
    breaks.dedup();
    let mut out = integrate_breaks(&mut radial, &breaks, outer_tol)?;
    if let Some(err) = failure {
        return Err(err);
    }
    out.error += inner_err * r_cut;
    Ok(out)
}
