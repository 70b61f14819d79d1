//! Particle boundaries inside the unit cell `(−½, ½) × (0, ∞)`.
//!
//! Each component is a closed counterclockwise curve sampled at equispaced
//! parameters `t_k = 2πk/n`, so the trapezoidal rule is spectrally accurate.
//! Normals point out of the particle.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::CellPoint;
use crate::spectral;

/// Minimum distance kept from the plate, the cell walls and between components.
pub const CELL_MARGIN: f64 = 1e-3;

/// Oversampling used when validating cell membership.
const CHECK_OVERSAMPLING: usize = 8;

/// Analytic description of a component, when one is known.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Disk {
        center: CellPoint,
        radius: f64,
    },
    /// `r(θ) = base_radius + amplitude·cos(lobes·θ)` around `center`.
    Star {
        center: CellPoint,
        base_radius: f64,
        amplitude: f64,
        lobes: u32,
    },
    /// Node samples only; derivatives come from trigonometric interpolation.
    Sampled,
}

/// One closed component, sampled at `n` equispaced parameters.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    pub kind: ShapeKind,
    points: Vec<[f64; 2]>,
    d1: Vec<[f64; 2]>,
    d2: Vec<[f64; 2]>,
}

impl BoundaryCurve {
    fn analytic(kind: ShapeKind, n: usize) -> Self {
        let mut points = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (p, a, b) = eval_analytic(&kind, t);
            points.push(p);
            d1.push(a);
            d2.push(b);
        }
        Self { kind, points, d1, d2 }
    }

    fn sampled(points: Vec<[f64; 2]>) -> Self {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let (dx1, dy1) = (spectral::derivative(&xs, 1), spectral::derivative(&ys, 1));
        let (dx2, dy2) = (spectral::derivative(&xs, 2), spectral::derivative(&ys, 2));
        Self {
            kind: ShapeKind::Sampled,
            points,
            d1: dx1.into_iter().zip(dy1).map(|(a, b)| [a, b]).collect(),
            d2: dx2.into_iter().zip(dy2).map(|(a, b)| [a, b]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Same curve at a different node count.
    fn resampled(&self, n: usize) -> Self {
        match self.kind {
            ShapeKind::Sampled => {
                let xs: Vec<f64> = self.points.iter().map(|p| p[0]).collect();
                let ys: Vec<f64> = self.points.iter().map(|p| p[1]).collect();
                let (xs, ys) = (spectral::resample(&xs, n), spectral::resample(&ys, n));
                Self::sampled(xs.into_iter().zip(ys).map(|(a, b)| [a, b]).collect())
            }
            _ => Self::analytic(self.kind.clone(), n),
        }
    }

    /// Twice the signed area, `∮ (x1 x2' − x2 x1') dt`.
    fn signed_area(&self) -> f64 {
        let n = self.len() as f64;
        0.5 * self
            .points
            .iter()
            .zip(&self.d1)
            .map(|(p, d)| p[0] * d[1] - p[1] * d[0])
            .sum::<f64>()
            * (2.0 * PI / n)
    }

    /// Fourier coefficients of the radial profile about the centroid, used
    /// for logging optimization trajectories.
    pub fn radial_fourier(&self, modes: usize) -> Vec<f64> {
        let n = self.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for p in &self.points {
            cx += p[0];
            cy += p[1];
        }
        cx /= n as f64;
        cy /= n as f64;
        let r: Vec<f64> = self.points.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).collect();
        let mut out = vec![cx, cy];
        for m in 0..=modes {
            let (mut a, mut b) = (0.0, 0.0);
            for (k, rk) in r.iter().enumerate() {
                let t = 2.0 * PI * (k * m) as f64 / n as f64;
                a += rk * t.cos();
                b += rk * t.sin();
            }
            let s = if m == 0 { 1.0 } else { 2.0 } / n as f64;
            out.push(a * s);
            if m > 0 {
                out.push(b * s);
            }
        }
        out
    }
}

fn eval_analytic(kind: &ShapeKind, t: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let (s, c) = t.sin_cos();
    match *kind {
        ShapeKind::Disk { center, radius } => (
            [center.x1 + radius * c, center.x2 + radius * s],
            [-radius * s, radius * c],
            [-radius * c, -radius * s],
        ),
        ShapeKind::Star {
            center,
            base_radius,
            amplitude,
            lobes,
        } => {
            let l = lobes as f64;
            let (sl, cl) = (l * t).sin_cos();
            let r = base_radius + amplitude * cl;
            let r1 = -amplitude * l * sl;
            let r2 = -amplitude * l * l * cl;
            (
                [center.x1 + r * c, center.x2 + r * s],
                [r1 * c - r * s, r1 * s + r * c],
                [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
            )
        }
        ShapeKind::Sampled => unreachable!("sampled curves have no analytic form"),
    }
}

/// Quadrature node on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub point: CellPoint,
    /// Outward unit normal.
    pub normal: [f64; 2],
    pub curvature: f64,
    /// `|x'(t)|`.
    pub speed: f64,
    /// Arclength quadrature weight `|x'(t)|·2π/n`.
    pub weight: f64,
    pub param: f64,
    pub component: usize,
}

/// Normal displacement field `h` sampled at the nodes, applied with step `eta`.
#[derive(Debug, Clone)]
pub struct NormalPerturbation {
    pub h: Vec<f64>,
    pub eta: f64,
}

/// The (possibly multi-component) particle boundary with its quadrature.
#[derive(Debug, Clone)]
pub struct ParticleBoundary {
    curves: Vec<BoundaryCurve>,
    nodes: Vec<BoundaryNode>,
    offsets: Vec<usize>,
}

impl ParticleBoundary {
    /// Build from components, validating cell membership, simplicity and disjointness.
    pub fn from_curves(curves: Vec<BoundaryCurve>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidArgument("boundary needs at least one component".into()));
        }
        for (i, c) in curves.iter().enumerate() {
            if c.len() < 8 || c.len() % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "component {i}: node count must be even and >= 8, got {}",
                    c.len()
                )));
            }
        }
        let b = Self::assemble(curves);
        b.validate()?;
        Ok(b)
    }

    fn assemble(curves: Vec<BoundaryCurve>) -> Self {
        let mut nodes = Vec::new();
        let mut offsets = vec![0];
        for (ci, c) in curves.iter().enumerate() {
            let n = c.len();
            for k in 0..n {
                let [x, y] = c.points[k];
                let [dx, dy] = c.d1[k];
                let [ddx, ddy] = c.d2[k];
                let speed = dx.hypot(dy);
                nodes.push(BoundaryNode {
                    point: CellPoint::new(x, y),
                    normal: [dy / speed, -dx / speed],
                    curvature: (dx * ddy - dy * ddx) / speed.powi(3),
                    speed,
                    weight: speed * 2.0 * PI / n as f64,
                    param: 2.0 * PI * k as f64 / n as f64,
                    component: ci,
                });
            }
            offsets.push(nodes.len());
        }
        Self {
            curves,
            nodes,
            offsets,
        }
    }

    fn validate(&self) -> Result<()> {
        for (ci, c) in self.curves.iter().enumerate() {
            if c.signed_area() <= 0.0 {
                return Err(Error::SelfIntersection(format!(
                    "component {ci} is not counterclockwise"
                )));
            }
            let check = c.resampled(c.len() * CHECK_OVERSAMPLING);
            for p in &check.points {
                if p[0] <= -0.5 + CELL_MARGIN || p[0] >= 0.5 - CELL_MARGIN {
                    return Err(Error::CellViolation(format!(
                        "component {ci} reaches x1 = {:.6} (cell walls at ±0.5, margin {CELL_MARGIN})",
                        p[0]
                    )));
                }
                if p[1] < CELL_MARGIN {
                    return Err(Error::CellViolation(format!(
                        "component {ci} reaches x2 = {:.6} (plate at 0, margin {CELL_MARGIN})",
                        p[1]
                    )));
                }
            }
            if matches!(c.kind, ShapeKind::Sampled) && polygon_self_intersects(&c.points) {
                return Err(Error::SelfIntersection(format!("component {ci} crosses itself")));
            }
        }
        for i in 0..self.curves.len() {
            for j in i + 1..self.curves.len() {
                if curves_overlap(&self.curves[i].points, &self.curves[j].points) {
                    return Err(Error::Overlap { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    pub fn curves(&self) -> &[BoundaryCurve] {
        &self.curves
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_components(&self) -> usize {
        self.curves.len()
    }

    /// Node index range of component `c`.
    pub fn component_range(&self, c: usize) -> std::ops::Range<usize> {
        self.offsets[c]..self.offsets[c + 1]
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.weight).collect()
    }

    pub fn nu2(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.normal[1]).collect()
    }

    pub fn y2(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.point.x2).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn area(&self) -> f64 {
        self.curves.iter().map(|c| c.signed_area()).sum()
    }

    /// `∮ ν dσ`, zero for closed curves.
    pub fn normal_flux(&self) -> [f64; 2] {
        self.nodes.iter().fold([0.0, 0.0], |acc, n| {
            [acc[0] + n.weight * n.normal[0], acc[1] + n.weight * n.normal[1]]
        })
    }

    /// `∮ f dσ`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.nodes.iter().zip(f).map(|(n, v)| n.weight * v).sum()
    }

    /// Largest gap between consecutive nodes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).fold(0.0, f64::max)
    }

    /// Tangential (arclength) derivative of node samples, per component.
    pub fn tangential_derivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(values.len());
        for c in 0..self.n_components() {
            let r = self.component_range(c);
            let d = spectral::derivative_complex(&values[r.clone()], 1);
            out.extend(d.into_iter().zip(&self.nodes[r]).map(|(v, n)| v / n.speed));
        }
        out
    }

    /// Same boundary with every component resampled to `n_per_component` nodes.
    /// Not re-validated.
    pub fn refined(&self, n_per_component: usize) -> ParticleBoundary {
        Self::assemble(self.curves.iter().map(|c| c.resampled(n_per_component)).collect())
    }

    /// Same boundary with each component refined (never coarsened) so that
    /// its node spacing is at most `spacing`.
    pub fn refined_to_spacing(&self, spacing: f64) -> ParticleBoundary {
        let weights = self.weights();
        Self::assemble(
            self.curves
                .iter()
                .enumerate()
                .map(|(c, curve)| {
                    let range = self.component_range(c);
                    let perimeter: f64 = weights[range.clone()].iter().sum();
                    let mut m = ((perimeter / spacing).ceil() as usize).max(range.len());
                    m += m % 2;
                    curve.resampled(m)
                })
                .collect(),
        )
    }

    /// Trigonometric interpolation of node samples onto [`Self::refined`] nodes.
    pub fn interpolate(&self, values: &[Complex64], n_per_component: usize) -> Vec<Complex64> {
        (0..self.n_components())
            .flat_map(|c| spectral::resample_complex(&values[self.component_range(c)], n_per_component))
            .collect()
    }

    /// Distance from `p` to the nearest node.
    pub fn node_distance(&self, p: CellPoint) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n.point - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies inside the particle (winding number of the node polygons).
    pub fn contains(&self, p: CellPoint) -> bool {
        self.curves.iter().any(|c| point_in_polygon(&c.points, [p.x1, p.x2]))
    }

    /// Move nodes along their normals by `eta·h` and rebuild the quadrature
    /// from the displaced samples.
    pub fn perturb(&self, pert: &NormalPerturbation) -> Result<ParticleBoundary> {
        if pert.h.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "perturbation has {} samples for {} nodes",
                pert.h.len(),
                self.len()
            )));
        }
        if pert.eta == 0.0 || pert.h.iter().all(|&v| v == 0.0) {
            return Ok(self.clone());
        }
        let mut curves = Vec::with_capacity(self.n_components());
        for c in 0..self.n_components() {
            let pts = self.component_range(c)
                .map(|i| {
                    let n = &self.nodes[i];
                    let s = pert.eta * pert.h[i];
                    [n.point.x1 + s * n.normal[0], n.point.x2 + s * n.normal[1]]
                })
                .collect();
            curves.push(BoundaryCurve::sampled(pts));
        }
        let b = Self::assemble(curves);
        if b.nodes.iter().any(|n| !(n.speed > 1e-10)) {
            return Err(Error::SelfIntersection("perturbed curve degenerates".into()));
        }
        b.validate()?;
        Ok(b)
    }
}

/// Disk with equispaced nodes.
pub fn make_disk(center: CellPoint, radius: f64, n_nodes: usize) -> Result<ParticleBoundary> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    ParticleBoundary::from_curves(vec![BoundaryCurve::analytic(
        ShapeKind::Disk { center, radius },
        n_nodes,
    )])
}

/// Star-shaped curve `r(θ) = base_radius + amplitude·cos(lobes·θ)`.
pub fn make_star(
    center: CellPoint,
    base_radius: f64,
    amplitude: f64,
    lobes: u32,
    n_nodes: usize,
) -> Result<ParticleBoundary> {
    if !(base_radius > 0.0) {
        return Err(Error::InvalidArgument(format!("base radius must be positive, got {base_radius}")));
    }
    if amplitude.abs() >= base_radius {
        return Err(Error::SelfIntersection(format!(
            "star amplitude {amplitude} must be below the base radius {base_radius}"
        )));
    }
    ParticleBoundary::from_curves(vec![BoundaryCurve::analytic(
        ShapeKind::Star {
            center,
            base_radius,
            amplitude,
            lobes,
        },
        n_nodes,
    )])
}

/// Closed curve through `points` (counter-clockwise, equispaced in
/// parameter), trigonometrically resampled to `n_nodes` nodes.
pub fn make_sampled(points: Vec<[f64; 2]>, n_nodes: usize) -> Result<ParticleBoundary> {
    if points.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "a sampled curve needs at least 8 points, got {}",
            points.len()
        )));
    }
    ParticleBoundary::from_curves(vec![BoundaryCurve::sampled(points).resampled(n_nodes)])
}

/// Union of disjoint components.
pub fn make_multi(parts: Vec<ParticleBoundary>) -> Result<ParticleBoundary> {
    let curves: Vec<BoundaryCurve> = parts.into_iter().flat_map(|p| p.curves).collect();
    ParticleBoundary::from_curves(curves)
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polygon_self_intersects(p: &[[f64; 2]]) -> bool {
    let n = p.len();
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(a, b, p[j], p[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

fn point_in_polygon(poly: &[[f64; 2]], q: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > q[1]) != (pj[1] > q[1])
            && q[0] < (pj[0] - pi[0]) * (q[1] - pi[1]) / (pj[1] - pi[1]) + pi[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn curves_overlap(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    if point_in_polygon(a, b[0]) || point_in_polygon(b, a[0]) {
        return true;
    }
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        for j in 0..nb {
            let d = (a[i][0] - b[j][0]).hypot(a[i][1] - b[j][1]);
            if d < CELL_MARGIN || segments_cross(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]) {
                return true;
            }
        }
    }
    false
}
