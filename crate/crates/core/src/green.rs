//! One-dimensional periodic Laplace Green function and its half-space
//! (Dirichlet plate) variant.
//!
//! The period is fixed to 1 in cell coordinates. The closed form
//!
//! ```text
//! G(x) = 1/(4π) · log( sinh²(π x2) + sin²(π x1) )
//! ```
//!
//! satisfies `ΔG = Σ_n δ(x + (n, 0))`. Near the real axis it is evaluated
//! directly; for `|x2| > 1` the algebraically equivalent form
//! `½|x2| − log 2/(2π) + 1/(4π)·log1p(q² − 2q cos 2πx1)`, `q = e^{−2π|x2|}`,
//! is used, which never overflows and keeps full relative accuracy of the
//! exponentially small correction.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Offsets closer than this to a lattice point `(n, 0)` are singular.
pub const LATTICE_TOL: f64 = 1e-12;

/// Beyond this height the exponential form is used.
const FAR_HEIGHT: f64 = 1.0;

/// Below this radius the remainder gradient uses its Taylor expansion.
const TAYLOR_RADIUS: f64 = 1e-3;

/// A point (or offset) in dimensionless cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellPoint {
    pub x1: f64,
    pub x2: f64,
}

impl CellPoint {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Same point with `x1` reduced to the canonical representative in (−½, ½].
    pub fn canonical(self) -> Self {
        Self::new(canonical_x1(self.x1), self.x2)
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

impl std::ops::Sub for CellPoint {
    type Output = CellPoint;
    fn sub(self, rhs: CellPoint) -> CellPoint {
        CellPoint::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

/// Value and target gradient of a Green function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub gradient: [f64; 2],
}

/// Reduce `x1` modulo 1 into (−½, ½].
pub fn canonical_x1(x1: f64) -> f64 {
    let r = x1 - x1.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

fn is_lattice_point(offset: CellPoint) -> bool {
    offset.x2.abs() < LATTICE_TOL && canonical_x1(offset.x1).abs() < LATTICE_TOL
}

/// `G` without the lattice-point check; returns `-inf` at lattice points.
#[inline]
pub(crate) fn g_periodic_raw(x1: f64, x2: f64) -> f64 {
    let a = x2.abs();
    if a > FAR_HEIGHT {
        let q = (-2.0 * PI * a).exp();
        let c = (2.0 * PI * x1).cos();
        0.5 * a - LN_2 / (2.0 * PI) + (q * (q - 2.0 * c)).ln_1p() / (4.0 * PI)
    } else {
        let sh = (PI * x2).sinh();
        let sn = (PI * x1).sin();
        (sh * sh + sn * sn).ln() / (4.0 * PI)
    }
}

/// Gradient of `G` without the lattice-point check.
#[inline]
pub(crate) fn grad_g_periodic_raw(x1: f64, x2: f64) -> [f64; 2] {
    let a = x2.abs();
    if a > FAR_HEIGHT {
        let q = (-2.0 * PI * a).exp();
        let (s, c) = (2.0 * PI * x1).sin_cos();
        let den = 1.0 + q * (q - 2.0 * c);
        [s * q / den, 0.5 * x2.signum() * (1.0 - q * q) / den]
    } else {
        let sh = (PI * x2).sinh();
        let sn = (PI * x1).sin();
        let d = sh * sh + sn * sn;
        [
            0.25 * (2.0 * PI * x1).sin() / d,
            0.25 * (2.0 * PI * x2).sinh() / d,
        ]
    }
}

/// `1/(4π) log1p(q² − 2q cos 2πx1)` with `q = e^{−2π|h|}`, given `c = cos 2πx1`.
#[inline]
fn far_tail(c: f64, h: f64) -> f64 {
    let q = (-2.0 * PI * h.abs()).exp();
    (q * (q - 2.0 * c)).ln_1p() / (4.0 * PI)
}

/// Half-space Green function `G(x − y) − G(x1 − y1, −x2 − y2)` without checks.
///
/// When both arguments are far from the plate scale the linear parts are
/// combined exactly as `−min(x2, y2)`.
#[inline]
pub(crate) fn g_halfspace_raw(target: CellPoint, source: CellPoint) -> f64 {
    let dx1 = target.x1 - source.x1;
    let direct = target.x2 - source.x2;
    let image = -target.x2 - source.x2;
    if direct.abs() > FAR_HEIGHT && image.abs() > FAR_HEIGHT {
        let c = (2.0 * PI * dx1).cos();
        let linear = 0.5 * (direct.abs() - image.abs());
        linear + far_tail(c, direct) - far_tail(c, image)
    } else {
        g_periodic_raw(dx1, direct) - g_periodic_raw(dx1, image)
    }
}

/// `G⁺(x, y) − ½(|x2 − y2| − |x2 + y2|)`: the part of the half-space Green
/// function that decays away from the source row, without cancellation
/// when both heights are large.
pub fn g_halfspace_decaying(target: CellPoint, source: CellPoint) -> f64 {
    let dx1 = target.x1 - source.x1;
    let direct = target.x2 - source.x2;
    let image = -target.x2 - source.x2;
    if direct.abs() > FAR_HEIGHT && image.abs() > FAR_HEIGHT {
        let c = (2.0 * PI * dx1).cos();
        far_tail(c, direct) - far_tail(c, image)
    } else {
        g_periodic_raw(dx1, direct) - 0.5 * direct.abs() - (g_periodic_raw(dx1, image) - 0.5 * image.abs())
    }
}

/// Target gradient of the half-space Green function without checks.
#[inline]
pub(crate) fn grad_g_halfspace_raw(target: CellPoint, source: CellPoint) -> [f64; 2] {
    let dx1 = target.x1 - source.x1;
    let d = grad_g_periodic_raw(dx1, target.x2 - source.x2);
    let m = grad_g_periodic_raw(dx1, -target.x2 - source.x2);
    // chain rule: ∂/∂x2 of G(·, −x2 − y2) flips sign
    [d[0] - m[0], d[1] + m[1]]
}

/// Target gradient of the image term `−G(x1 − y1, −x2 − y2)` alone.
#[inline]
pub(crate) fn grad_image_raw(target: CellPoint, source: CellPoint) -> [f64; 2] {
    let m = grad_g_periodic_raw(target.x1 - source.x1, -target.x2 - source.x2);
    [-m[0], m[1]]
}

/// Periodic Green function `1/(4π) log(sinh²(π x2) + sin²(π x1))`.
pub fn g_periodic(offset: CellPoint) -> Result<f64> {
    if is_lattice_point(offset) {
        return Err(Error::LatticePoint {
            x1: offset.x1,
            x2: offset.x2,
        });
    }
    let v = g_periodic_raw(offset.x1, offset.x2);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::LatticePoint {
            x1: offset.x1,
            x2: offset.x2,
        })
    }
}

/// Gradient of [`g_periodic`].
pub fn grad_g_periodic(offset: CellPoint) -> Result<[f64; 2]> {
    if is_lattice_point(offset) {
        return Err(Error::LatticePoint {
            x1: offset.x1,
            x2: offset.x2,
        });
    }
    Ok(grad_g_periodic_raw(offset.x1, offset.x2))
}

/// Truncated Fourier series of the periodic Green function,
/// `½|x2| − log 2/(2π) − Σ_{n=1}^{N} e^{−2πn|x2|} cos(2πn x1)/(2πn)`.
///
/// Independent of the closed form; used to cross-check it.
pub fn g_periodic_fourier(offset: CellPoint, n_terms: usize) -> Result<f64> {
    if offset.x2 == 0.0 {
        return Err(Error::InvalidArgument(
            "Fourier series requires x2 != 0".into(),
        ));
    }
    if n_terms == 0 {
        return Err(Error::InvalidArgument("n_terms must be >= 1".into()));
    }
    let a = offset.x2.abs();
    let mut sum = 0.0;
    // accumulate smallest terms first
    for n in (1..=n_terms).rev() {
        let nf = n as f64;
        sum += (-2.0 * PI * nf * a).exp() * (2.0 * PI * nf * offset.x1).cos() / (2.0 * PI * nf);
    }
    Ok(0.5 * a - LN_2 / (2.0 * PI) - sum)
}

fn check_halfspace(target: CellPoint, source: CellPoint) -> Result<()> {
    if !(target.x2 >= 0.0) || !(source.x2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "half-space Green function needs target.x2 >= 0 and source.x2 > 0, got {} and {}",
            target.x2, source.x2
        )));
    }
    let off = target - source;
    if is_lattice_point(off) {
        return Err(Error::LatticePoint {
            x1: off.x1,
            x2: off.x2,
        });
    }
    Ok(())
}

/// Periodic Green function of the upper half space with a Dirichlet plate at `x2 = 0`.
pub fn g_halfspace(target: CellPoint, source: CellPoint) -> Result<f64> {
    check_halfspace(target, source)?;
    if target.x2 == 0.0 {
        return Ok(0.0);
    }
    Ok(g_halfspace_raw(target, source))
}

/// Gradient of [`g_halfspace`] with respect to the target point.
pub fn grad_g_halfspace(target: CellPoint, source: CellPoint) -> Result<[f64; 2]> {
    check_halfspace(target, source)?;
    let off = (target - source).canonical();
    if off.norm() < LATTICE_TOL {
        return Err(Error::SingularPoint { tol: LATTICE_TOL });
    }
    Ok(grad_g_halfspace_raw(target, source))
}

/// Value and gradient of the half-space Green function in one call.
pub fn eval_halfspace(target: CellPoint, source: CellPoint) -> Result<GreenEval> {
    Ok(GreenEval {
        value: g_halfspace(target, source)?,
        gradient: grad_g_halfspace(target, source)?,
    })
}

/// `(sinh²(π x2) + sin²(π x1)) / |x|²` written as a weighted mean of
/// `(sinh(π x2)/x2)²` and `(sin(π x1)/x1)²`, so nothing cancels near 0.
fn log_ratio(x1: f64, x2: f64) -> f64 {
    let r2 = x1 * x1 + x2 * x2;
    if r2 == 0.0 {
        return PI * PI;
    }
    let sh = sinhc(PI * x2) * PI;
    let sn = sinc(PI * x1) * PI;
    (x2 * x2 * sh * sh + x1 * x1 * sn * sn) / r2
}

fn sinhc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 + t * t / 6.0
    } else {
        t.sinh() / t
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Smooth remainder `R(x) = G(x) − log|x|/(2π)`; analytic at `x = 0`
/// with `R(0) = log(π²)/(4π)`.
///
/// The offset is used as given (no reduction modulo 1).
pub fn remainder(offset: CellPoint) -> f64 {
    let (x1, x2) = (offset.x1, offset.x2);
    if x2.abs() > FAR_HEIGHT || x1.abs() > 1.0 {
        g_periodic_raw(x1, x2) - offset.norm().ln() / (2.0 * PI)
    } else {
        log_ratio(x1, x2).ln() / (4.0 * PI)
    }
}

/// Gradient of [`remainder`].
pub fn grad_remainder(offset: CellPoint) -> [f64; 2] {
    let (s, t) = (offset.x1, offset.x2);
    let r2 = s * s + t * t;
    if r2.sqrt() < TAYLOR_RADIUS {
        // R = R0 + (1/4π)[ (π²/3)(t² − s²) − (π⁴/90)(t⁴ + s⁴) + (π⁴/15) t² s² ] + O(|x|⁶)
        let p2 = PI * PI;
        let p4 = p2 * p2;
        let ds = -2.0 * p2 / 3.0 * s - 4.0 * p4 / 90.0 * s * s * s + 2.0 * p4 / 15.0 * t * t * s;
        let dt = 2.0 * p2 / 3.0 * t - 4.0 * p4 / 90.0 * t * t * t + 2.0 * p4 / 15.0 * s * s * t;
        [ds / (4.0 * PI), dt / (4.0 * PI)]
    } else {
        let g = grad_g_periodic_raw(s, t);
        [g[0] - s / (2.0 * PI * r2), g[1] - t / (2.0 * PI * r2)]
    }
}

/// Split `G(offset) = log|offset|/(2π) + R(offset)`; returns `(log_part, remainder)`.
pub fn kernel_split(offset: CellPoint) -> (f64, f64) {
    (offset.norm().ln() / (2.0 * PI), remainder(offset))
}
