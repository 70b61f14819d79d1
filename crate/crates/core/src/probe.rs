//! Accurate evaluation of single-layer potentials close to the boundary.
//!
//! The density is trigonometrically interpolated onto a much finer copy of
//! the boundary so that the trapezoidal rule stays accurate at distances of
//! a few fine spacings. One-sided traces are recovered by extrapolating
//! samples taken along the normal.

use num_complex::Complex64;

use crate::geometry::ParticleBoundary;
use crate::green::{self, CellPoint};
use crate::spectral;

/// Single-layer potential of a density on a refined boundary.
#[derive(Debug, Clone)]
pub struct RefinedLayer {
    points: Vec<CellPoint>,
    weighted: Vec<Complex64>,
}

impl RefinedLayer {
    /// Refine every component so that the node spacing is at most `spacing`.
    pub fn new(boundary: &ParticleBoundary, density: &[Complex64], spacing: f64) -> Self {
        let fine = boundary.refined_to_spacing(spacing);
        let mut points = Vec::with_capacity(fine.len());
        let mut weighted = Vec::with_capacity(fine.len());
        for c in 0..boundary.n_components() {
            let m = fine.component_range(c).len();
            let phi = spectral::resample_complex(&density[boundary.component_range(c)], m);
            for (node, f) in fine.nodes()[fine.component_range(c)].iter().zip(phi) {
                points.push(node.point);
                weighted.push(f * node.weight);
            }
        }
        Self { points, weighted }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn potential(&self, x: CellPoint) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weighted)
            .map(|(&y, &f)| f * green::g_halfspace_raw(x, y))
            .sum()
    }

    pub fn gradient(&self, x: CellPoint) -> [Complex64; 2] {
        let mut g = [Complex64::new(0.0, 0.0); 2];
        for (&y, &f) in self.points.iter().zip(&self.weighted) {
            let d = green::grad_g_halfspace_raw(x, y);
            g[0] += f * d[0];
            g[1] += f * d[1];
        }
        g
    }
}

/// One-sided limits of a field and its normal derivative at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedTrace {
    pub value: Complex64,
    pub normal_derivative: Complex64,
}

/// Interior (`−`) and exterior (`+`) traces of `field` at `point`, from
/// samples at distances `d`, `2d`, `3d` along `∓normal`, extrapolated with
/// the quadratic through them.
pub fn probe_traces(
    field: impl Fn(CellPoint) -> Complex64,
    point: CellPoint,
    normal: [f64; 2],
    d: f64,
) -> (OneSidedTrace, OneSidedTrace) {
    let side = |sign: f64| {
        let u: Vec<Complex64> = (1..=3)
            .map(|k| {
                let s = sign * k as f64 * d;
                field(CellPoint::new(point.x1 + s * normal[0], point.x2 + s * normal[1]))
            })
            .collect();
        let value = u[0] * 3.0 - u[1] * 3.0 + u[2];
        let slope = (u[0] * -2.5 + u[1] * 4.0 - u[2] * 1.5) / d;
        OneSidedTrace {
            value,
            normal_derivative: slope * sign,
        }
    };
    (side(-1.0), side(1.0))
}
