//! Shape derivative of `α∞` and gradient ascent on `J = ½|α∞|²`.
//!
//! With `k = μ_m/μ_c` the auxiliary fields are
//!
//! * `v = x2 + S⁺[ψ]` (one density on both sides), where the flux condition
//!   `∂v/∂ν|₊ − k ∂v/∂ν|₋ = 0` gives `((1+k)/2 + (1−k)K*)ψ = −(1−k)ν2`.
//!   This is the corrector equation, so `v = x2 + α` and `v − x2 → α∞`.
//! * `w = x2 + S⁺[a]` outside and `w = x2 + S⁺[b]` inside. The conditions
//!   `k w|₊ − w|₋ = 0` and `∂w/∂ν|₊ − ∂w/∂ν|₋ = 0` give the 2N system
//!
//!   ```text
//!   k S a − S b          = (1 − k) y2
//!   (½ + K*) a − (−½ + K*) b = 0
//!   ```
//!
//!   The solution coincides with `v` outside and `k·v` inside, which the
//!   tests use as an independent check.
//!
//! All traces are taken from the interior. Tangential derivatives come from
//! spectral differentiation of the (continuous) boundary trace.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{NormalPerturbation, ParticleBoundary};
use crate::green::{self, CellPoint};
use crate::impedance::alpha_inf_direct;
use crate::impedance::spectral_parameter_from_ratio;
use crate::operators::PeriodicOperators;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

fn apply_real(m: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().zip(v).map(|(&a, &b)| b * a).sum())
        .collect()
}

fn solve_complex(m: DMatrix<Complex64>, rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let x = m
        .lu()
        .solve(&DVector::from_vec(rhs))
        .ok_or(Error::NearSingular { distance: 0.0 })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NearSingular { distance: 0.0 });
    }
    Ok(x.iter().copied().collect())
}

/// Layer representation of an auxiliary field with its interior traces.
#[derive(Debug, Clone)]
pub struct AuxiliaryField {
    /// Density of the representation outside the particle.
    pub exterior_density: Vec<Complex64>,
    /// Density of the representation inside the particle.
    pub interior_density: Vec<Complex64>,
    /// `f|₋` at the nodes.
    pub trace: Vec<Complex64>,
    /// `∂f/∂ν|₋` at the nodes.
    pub normal_derivative: Vec<Complex64>,
    /// `∂f/∂τ|₋` at the nodes.
    pub tangential_derivative: Vec<Complex64>,
}

impl AuxiliaryField {
    fn from_densities(
        ops: &PeriodicOperators,
        boundary: &ParticleBoundary,
        exterior_density: Vec<Complex64>,
        interior_density: Vec<Complex64>,
    ) -> Self {
        let s = apply_real(&ops.single_layer, &interior_density);
        let k = apply_real(&ops.np, &interior_density);
        let nodes = boundary.nodes();
        let trace: Vec<Complex64> = nodes.iter().zip(&s).map(|(n, &v)| v + n.point.x2).collect();
        let normal_derivative = nodes
            .iter()
            .zip(k.iter().zip(&interior_density))
            .map(|(n, (&kb, &b))| kb - b * 0.5 + n.normal[1])
            .collect();
        let tangential_derivative = boundary.tangential_derivative(&trace);
        Self {
            exterior_density,
            interior_density,
            trace,
            normal_derivative,
            tangential_derivative,
        }
    }

    /// Field value at `x` (plain quadrature; inaccurate very near the boundary).
    pub fn eval(&self, boundary: &ParticleBoundary, x: CellPoint) -> Complex64 {
        let density = if boundary.contains(x) {
            &self.interior_density
        } else {
            &self.exterior_density
        };
        let layer: Complex64 = boundary
            .nodes()
            .iter()
            .zip(density)
            .map(|(n, &p)| p * (green::g_halfspace_raw(x, n.point) * n.weight))
            .sum();
        layer + x.x2
    }
}

/// `v = x2 + S⁺[ψ]` with `∂v/∂ν|₊ = k ∂v/∂ν|₋`, `k = μ_m/μ_c`.
pub fn solve_auxiliary_v(ops: &PeriodicOperators, boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<AuxiliaryField> {
    let n = ops.len();
    let k = mu_ratio;
    let diag = (C1 + k) * 0.5;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { diag } else { C0 };
        d + (C1 - k) * ops.np[(i, j)]
    });
    let rhs = boundary.nu2().into_iter().map(|v| -(C1 - k) * v).collect();
    let psi = solve_complex(m, rhs).map_err(|_| near_singular(ops, k))?;
    Ok(AuxiliaryField::from_densities(ops, boundary, psi.clone(), psi))
}

/// `w = x2 + S⁺[a]` outside, `x2 + S⁺[b]` inside, with `k w|₊ = w|₋` and
/// continuous flux.
pub fn solve_auxiliary_w(ops: &PeriodicOperators, boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<AuxiliaryField> {
    let n = ops.len();
    let k = mu_ratio;
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (r, c) = (i % n, j % n);
        let eye = if r == c { 0.5 } else { 0.0 };
        match (i < n, j < n) {
            (true, true) => k * ops.single_layer[(r, c)],
            (true, false) => Complex64::new(-ops.single_layer[(r, c)], 0.0),
            (false, true) => Complex64::new(eye + ops.np[(r, c)], 0.0),
            (false, false) => Complex64::new(eye - ops.np[(r, c)], 0.0),
        }
    });
    let mut rhs: Vec<Complex64> = boundary.y2().into_iter().map(|y| (C1 - k) * y).collect();
    rhs.extend(std::iter::repeat_n(C0, n));
    let x = solve_complex(m, rhs).map_err(|_| near_singular(ops, k))?;
    let (a, b) = x.split_at(n);
    Ok(AuxiliaryField::from_densities(ops, boundary, a.to_vec(), b.to_vec()))
}

fn near_singular(ops: &PeriodicOperators, k: Complex64) -> Error {
    if (k - C1).norm() == 0.0 {
        return Error::NearSingular { distance: f64::INFINITY };
    }
    Error::NearSingular {
        distance: crate::impedance::distance_to_spectrum(ops, spectral_parameter_from_ratio(k)),
    }
}

/// Pointwise shape derivative of `α∞` and of `J = ½|α∞|²`.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    /// `d_S α∞` at the nodes.
    pub density: Vec<Complex64>,
    /// `Re(d_S α∞ · conj α∞)` at the nodes.
    pub j_gradient: Vec<f64>,
    pub alpha_inf: Complex64,
}

impl ShapeGradient {
    /// `∮ h · d_S α∞ dσ`.
    pub fn directional_derivative(&self, boundary: &ParticleBoundary, h: &[f64]) -> Complex64 {
        boundary
            .nodes()
            .iter()
            .zip(h.iter().zip(&self.density))
            .map(|(n, (&hv, &d))| d * (hv * n.weight))
            .sum()
    }

    /// `∮ h · Re(d_S α∞ conj α∞) dσ`, the derivative of `J` along `h`.
    pub fn j_directional_derivative(&self, boundary: &ParticleBoundary, h: &[f64]) -> f64 {
        boundary
            .nodes()
            .iter()
            .zip(h.iter().zip(&self.j_gradient))
            .map(|(n, (&hv, &g))| hv * g * n.weight)
            .sum()
    }

    /// `(∮ (∂J)² dσ)^{1/2}`.
    pub fn norm(&self, boundary: &ParticleBoundary) -> f64 {
        self.j_directional_derivative(boundary, &self.j_gradient).sqrt()
    }
}

/// `d_S α∞ = (1 − k)[∂v/∂ν ∂w/∂ν + (1/k) ∂v/∂τ ∂w/∂τ]` from interior traces.
///
/// The prefactor is `1 − k` rather than `k − 1`: with `α∞ = −∮ y2 φ` the
/// opposite sign disagrees with finite differences of `α∞` under boundary
/// perturbations.
pub fn shape_derivative(v: &AuxiliaryField, w: &AuxiliaryField, mu_ratio: Complex64, alpha_inf: Complex64) -> ShapeGradient {
    let k = mu_ratio;
    let pre = C1 - k;
    let density: Vec<Complex64> = (0..v.trace.len())
        .map(|i| {
            pre * (v.normal_derivative[i] * w.normal_derivative[i]
                + v.tangential_derivative[i] * w.tangential_derivative[i] / k)
        })
        .collect();
    let j_gradient = density.iter().map(|d| (d * alpha_inf.conj()).re).collect();
    ShapeGradient {
        density,
        j_gradient,
        alpha_inf,
    }
}

/// Assemble operators and evaluate the shape gradient of `boundary`.
pub fn shape_gradient(boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<ShapeGradient> {
    let ops = PeriodicOperators::assemble(boundary)?;
    shape_gradient_with(&ops, boundary, mu_ratio)
}

pub fn shape_gradient_with(ops: &PeriodicOperators, boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<ShapeGradient> {
    let v = solve_auxiliary_v(ops, boundary, mu_ratio)?;
    let w = solve_auxiliary_w(ops, boundary, mu_ratio)?;
    let alpha = alpha_for_ratio(ops, boundary, mu_ratio)?;
    Ok(shape_derivative(&v, &w, mu_ratio, alpha))
}

/// `α∞` for contrast `k`; zero without contrast.
pub fn alpha_for_ratio(ops: &PeriodicOperators, boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<Complex64> {
    if (mu_ratio - C1).norm() == 0.0 {
        return Ok(C0);
    }
    Ok(alpha_inf_direct(ops, boundary, spectral_parameter_from_ratio(mu_ratio))?.alpha_inf)
}

/// `α∞` of a freshly assembled boundary.
pub fn alpha_of(boundary: &ParticleBoundary, mu_ratio: Complex64) -> Result<Complex64> {
    alpha_for_ratio(&PeriodicOperators::assemble(boundary)?, boundary, mu_ratio)
}

/// Finite-difference oracle `(α∞(B_η) − α∞(B))/η`.
pub fn fd_directional_derivative(boundary: &ParticleBoundary, mu_ratio: Complex64, h: &[f64], eta: f64) -> Result<Complex64> {
    let base = alpha_of(boundary, mu_ratio)?;
    let moved = boundary.perturb(&NormalPerturbation { h: h.to_vec(), eta })?;
    Ok((alpha_of(&moved, mu_ratio)? - base) / eta)
}

/// Weighted L² projection of node values onto `{1, cos mt, sin mt}_{m ≤ modes}`
/// on each component.
pub fn project_fourier(boundary: &ParticleBoundary, values: &[f64], modes: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for c in 0..boundary.n_components() {
        let range = boundary.component_range(c);
        let nodes = &boundary.nodes()[range.clone()];
        let nb = (2 * modes + 1).min(nodes.len() - 1);
        let basis = |k: usize, t: f64| -> f64 {
            if k == 0 {
                1.0
            } else {
                let m = k.div_ceil(2) as f64;
                if k % 2 == 1 {
                    (m * t).cos()
                } else {
                    (m * t).sin()
                }
            }
        };
        let phi = DMatrix::from_fn(nodes.len(), nb, |i, k| basis(k, nodes[i].param));
        let wphi = DMatrix::from_fn(nodes.len(), nb, |i, k| phi[(i, k)] * nodes[i].weight);
        let gram = wphi.transpose() * &phi;
        let rhs = wphi.transpose() * DVector::from_column_slice(&values[range.clone()]);
        let coef = gram
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .unwrap_or_else(|| DVector::zeros(nb));
        let proj = phi * coef;
        out[range].copy_from_slice(proj.as_slice());
    }
    out
}

/// Why an ascent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AscentStatus {
    /// Requested number of iterations done.
    MaxIterations,
    /// Gradient norm below tolerance.
    Stationary,
    /// Step shrank below the floor without an acceptable point.
    StepFloor,
    /// Every trial step left the cell or self-intersected.
    CellConstraint,
}

impl AscentStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AscentStatus::MaxIterations => "max_iterations",
            AscentStatus::Stationary => "stationary",
            AscentStatus::StepFloor => "step_floor",
            AscentStatus::CellConstraint => "cell_constraint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub steps: usize,
    /// First trial step (max normal displacement, cell units).
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub armijo: f64,
    pub gradient_tol: f64,
    /// Fourier modes kept in the search direction.
    pub modes: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            steps: 20,
            initial_step: 0.01,
            max_step: 0.05,
            min_step: 1e-8,
            armijo: 1e-4,
            gradient_tol: 1e-12,
            modes: 16,
        }
    }
}

/// One accepted iterate.
#[derive(Debug, Clone)]
pub struct AscentRecord {
    pub iteration: usize,
    pub boundary: ParticleBoundary,
    pub alpha_inf: Complex64,
    pub j: f64,
    pub gradient_norm: f64,
    /// Step that produced this iterate (0 for the start).
    pub step_size: f64,
}

#[derive(Debug, Clone)]
pub struct AscentTrajectory {
    pub records: Vec<AscentRecord>,
    pub status: AscentStatus,
}

impl AscentTrajectory {
    pub fn last(&self) -> &AscentRecord {
        self.records.last().expect("trajectory holds the initial state")
    }
}

/// Projected gradient ascent on `J = ½|α∞|²` at fixed contrast, with Armijo
/// backtracking. Operators are rebuilt for every trial boundary.
pub fn ascend_j(boundary: &ParticleBoundary, mu_ratio: Complex64, opts: &AscentOptions) -> Result<AscentTrajectory> {
    let mut current = boundary.clone();
    let mut ops = PeriodicOperators::assemble(&current)?;
    let mut grad = shape_gradient_with(&ops, &current, mu_ratio)?;
    let mut records = vec![AscentRecord {
        iteration: 0,
        boundary: current.clone(),
        alpha_inf: grad.alpha_inf,
        j: 0.5 * grad.alpha_inf.norm_sqr(),
        gradient_norm: grad.norm(&current),
        step_size: 0.0,
    }];
    let mut step = opts.initial_step;
    let mut status = AscentStatus::MaxIterations;

    for it in 1..=opts.steps {
        let j0 = records.last().unwrap().j;
        if records.last().unwrap().gradient_norm <= opts.gradient_tol {
            status = AscentStatus::Stationary;
            break;
        }
        let mut h = project_fourier(&current, &grad.j_gradient, opts.modes);
        let hmax = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(hmax > 0.0) {
            status = AscentStatus::Stationary;
            break;
        }
        h.iter_mut().for_each(|v| *v /= hmax);
        let slope = grad.j_directional_derivative(&current, &h);
        if !(slope > 0.0) {
            status = AscentStatus::Stationary;
            break;
        }

        let mut eta = step;
        let mut only_violations = true;
        let accepted = loop {
            if eta < opts.min_step {
                break None;
            }
            match current.perturb(&NormalPerturbation { h: h.clone(), eta }) {
                Ok(trial) => {
                    let trial_ops = PeriodicOperators::assemble(&trial);
                    if let Ok(trial_ops) = trial_ops {
                        if let Ok(alpha) = alpha_for_ratio(&trial_ops, &trial, mu_ratio) {
                            only_violations = false;
                            let j = 0.5 * alpha.norm_sqr();
                            if j >= j0 + opts.armijo * eta * slope {
                                break Some((trial, trial_ops, j));
                            }
                        }
                    }
                }
                Err(e) if e.is_validation() => {}
                Err(e) => return Err(e),
            }
            eta *= 0.5;
        };
        let Some((trial, trial_ops, j)) = accepted else {
            status = if only_violations {
                AscentStatus::CellConstraint
            } else {
                AscentStatus::StepFloor
            };
            break;
        };
        current = trial;
        ops = trial_ops;
        grad = shape_gradient_with(&ops, &current, mu_ratio)?;
        log::debug!("ascent iteration {it}: J = {j:.6e}, step = {eta:.3e}");
        records.push(AscentRecord {
            iteration: it,
            boundary: current.clone(),
            alpha_inf: grad.alpha_inf,
            j,
            gradient_norm: grad.norm(&current),
            step_size: eta,
        });
        step = (2.0 * eta).min(opts.max_step);
    }
    Ok(AscentTrajectory { records, status })
}

/// `cos(mode·t)` sampled at the nodes, a convenient test perturbation.
pub fn cosine_mode(boundary: &ParticleBoundary, mode: u32) -> Vec<f64> {
    boundary
        .nodes()
        .iter()
        .map(|n| (mode as f64 * n.param).cos())
        .collect()
}

/// Fourier-mode perturbation with the given coefficients on `{cos mt, sin mt}`.
pub fn fourier_perturbation(boundary: &ParticleBoundary, cos: &[f64], sin: &[f64]) -> Vec<f64> {
    boundary
        .nodes()
        .iter()
        .map(|n| {
            let c: f64 = cos.iter().enumerate().map(|(m, a)| a * (m as f64 * n.param).cos()).sum();
            let s: f64 = sin.iter().enumerate().map(|(m, b)| b * (m as f64 * n.param).sin()).sum();
            c + s
        })
        .collect()
}

/// Normal velocity of a rigid translation by `(d1, d2)`.
pub fn translation_perturbation(boundary: &ParticleBoundary, d: [f64; 2]) -> Vec<f64> {
    boundary
        .nodes()
        .iter()
        .map(|n| n.normal[0] * d[0] + n.normal[1] * d[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk;

    fn disk() -> ParticleBoundary {
        make_disk(CellPoint::new(0.0, 0.5), 0.2, 64).unwrap()
    }

    #[test]
    fn no_contrast_means_no_scattering() {
        let b = disk();
        let ops = PeriodicOperators::assemble(&b).unwrap();
        let v = solve_auxiliary_v(&ops, &b, C1).unwrap();
        let w = solve_auxiliary_w(&ops, &b, C1).unwrap();
        assert!(v.interior_density.iter().all(|p| p.norm() == 0.0));
        assert!(w.interior_density.iter().chain(&w.exterior_density).all(|p| p.norm() < 1e-12));
        let g = shape_gradient_with(&ops, &b, C1).unwrap();
        assert!(g.density.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn w_is_v_outside_and_scaled_v_inside() {
        let b = disk();
        let ops = PeriodicOperators::assemble(&b).unwrap();
        let k = Complex64::new(-0.4, 0.05);
        let v = solve_auxiliary_v(&ops, &b, k).unwrap();
        let w = solve_auxiliary_w(&ops, &b, k).unwrap();
        for i in 0..b.len() {
            assert!((w.normal_derivative[i] - k * v.normal_derivative[i]).norm() < 1e-9);
            assert!((w.trace[i] - k * v.trace[i]).norm() < 1e-9);
        }
        for x in [CellPoint::new(0.1, 1.2), CellPoint::new(-0.4, 0.2)] {
            assert!((w.eval(&b, x) - v.eval(&b, x)).norm() < 1e-9);
        }
        let x = CellPoint::new(0.0, 0.5);
        assert!((w.eval(&b, x) - k * v.eval(&b, x)).norm() < 1e-9);
    }

    #[test]
    fn interior_flux_vanishes() {
        let b = disk();
        let ops = PeriodicOperators::assemble(&b).unwrap();
        let v = solve_auxiliary_v(&ops, &b, Complex64::new(-0.5, 0.1)).unwrap();
        let flux: Complex64 = b
            .nodes()
            .iter()
            .zip(&v.normal_derivative)
            .map(|(n, &d)| d * n.weight)
            .sum();
        assert!(flux.norm() < 1e-12);
    }

    #[test]
    fn fourier_projection_reproduces_band_limited_input() {
        let b = disk();
        let h = fourier_perturbation(&b, &[0.1, 0.0, 0.3], &[0.0, 0.5, 0.0, 0.2]);
        let p = project_fourier(&b, &h, 16);
        for (a, c) in h.iter().zip(&p) {
            assert!((a - c).abs() < 1e-12);
        }
        let p = project_fourier(&b, &h, 1);
        let expect = fourier_perturbation(&b, &[0.1], &[0.0, 0.5]);
        for (a, c) in expect.iter().zip(&p) {
            assert!((a - c).abs() < 1e-12);
        }
    }
}
