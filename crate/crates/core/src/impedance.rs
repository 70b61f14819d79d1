//! Drude dispersion, the effective impedance `α∞` of the particle layer,
//! the cell corrector `α`, and the reflection coefficient of the resulting
//! impedance boundary condition.
//!
//! With `α = S⁺[φ]` the transmission conditions of the corrector problem
//! reduce, through the jump relations `∂S⁺[φ]/∂ν|± = (±½ + K*)φ`, to
//!
//! ```text
//! (z − K*) φ = ν2,   z = −λ_μ = (μ_c + μ_m) / (2(μ_m − μ_c)),
//! α∞ = −∮ y2 φ dσ.
//! ```
//!
//! Every solver here takes the spectral parameter `z` directly. For Drude
//! metals `Im z > 0`, which keeps `z` off the real spectrum of `K*` and
//! gives `Im α∞ > 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ParticleBoundary;
use crate::green::{self, CellPoint};
use crate::operators::{project_zero_mean, PeriodicOperators, SpectralDecomposition};

/// `hc` in eV·nm.
pub const HC_EV_NM: f64 = 1239.841_984;
/// Reduced Planck constant in eV·s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const MU_0: f64 = 1.256_637_062_12e-6;
pub const EPS_0: f64 = 8.854_187_812_8e-12;

/// Wavelength range (nm) accepted by [`MaterialState::drude_gold`].
pub const WAVELENGTH_RANGE_NM: (f64, f64) = (300.0, 1500.0);

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Drude parameters of the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrudeParams {
    /// `ħω_p` in eV.
    pub plasma_ev: f64,
    /// `ħγ` in eV.
    pub damping_ev: f64,
    /// High-frequency background; 1 gives the plain free-electron model.
    pub background: f64,
}

impl Default for DrudeParams {
    fn default() -> Self {
        Self {
            plasma_ev: 9.02,
            damping_ev: 0.027,
            background: 1.0,
        }
    }
}

impl DrudeParams {
    /// Relative Drude response `background − ω_p²/(ω² + iγω)` at photon energy `ħω`.
    pub fn relative(&self, photon_ev: f64) -> Complex64 {
        let w = photon_ev;
        self.background
            - self.plasma_ev * self.plasma_ev / Complex64::new(w * w, self.damping_ev * w)
    }
}

/// `(μ_c + μ_m) / (2(μ_c − μ_m))`.
pub fn lambda_mu(mu_c: Complex64, mu_m: f64) -> Complex64 {
    (mu_c + mu_m) / ((mu_c - mu_m) * 2.0)
}

/// Material parameters at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialState {
    /// Vacuum wavelength in metres.
    pub wavelength: f64,
    /// Angular frequency in rad/s.
    pub omega: f64,
    pub eps_m: f64,
    pub mu_m: f64,
    /// Inert in the quasi-static cell problem.
    pub eps_c: Complex64,
    pub mu_c: Complex64,
    pub lambda_mu: Complex64,
    pub k_m: f64,
    /// Not used by the Laplace cell problem.
    pub k_c: Complex64,
}

impl MaterialState {
    /// Drude particle in vacuum at `wavelength_nm`; the dispersion is carried
    /// by `μ_c`. Rejects wavelengths outside [`WAVELENGTH_RANGE_NM`].
    pub fn drude_gold(wavelength_nm: f64, params: &DrudeParams) -> Result<Self> {
        let (lo, hi) = WAVELENGTH_RANGE_NM;
        if !(lo..=hi).contains(&wavelength_nm) {
            return Err(Error::WavelengthOutOfRange(wavelength_nm));
        }
        Self::drude(wavelength_nm, params, Complex64::new(EPS_0, 0.0))
    }

    /// As [`Self::drude_gold`] without the range check and with an explicit `ε_c`.
    pub fn drude(wavelength_nm: f64, params: &DrudeParams, eps_c: Complex64) -> Result<Self> {
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {wavelength_nm}"
            )));
        }
        let photon_ev = HC_EV_NM / wavelength_nm;
        let omega = photon_ev / HBAR_EV_S;
        let mu_c = params.relative(photon_ev) * MU_0;
        Ok(Self::new(wavelength_nm * 1e-9, omega, EPS_0, MU_0, eps_c, mu_c))
    }

    pub fn new(wavelength: f64, omega: f64, eps_m: f64, mu_m: f64, eps_c: Complex64, mu_c: Complex64) -> Self {
        Self {
            wavelength,
            omega,
            eps_m,
            mu_m,
            eps_c,
            mu_c,
            lambda_mu: lambda_mu(mu_c, mu_m),
            k_m: omega * (eps_m * mu_m).sqrt(),
            k_c: (eps_c * mu_c).sqrt() * omega,
        }
    }

    /// The resolvent parameter `z = −λ_μ`.
    pub fn spectral_parameter(&self) -> Complex64 {
        -self.lambda_mu
    }

    /// `μ_m / μ_c`.
    pub fn mu_ratio(&self) -> Complex64 {
        Complex64::new(self.mu_m, 0.0) / self.mu_c
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength * 1e9
    }
}

/// Spectral parameter for a given contrast `k = μ_m/μ_c`: `(1 + k)/(2(k − 1))`.
pub fn spectral_parameter_from_ratio(ratio: Complex64) -> Complex64 {
    (ratio + 1.0) / ((ratio - 1.0) * 2.0)
}

/// Inverse of [`spectral_parameter_from_ratio`].
pub fn ratio_from_spectral_parameter(z: Complex64) -> Complex64 {
    (z * 2.0 + 1.0) / (z * 2.0 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Direct,
    Spectral,
}

/// One value of the effective impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceResult {
    pub alpha_inf: Complex64,
    /// `z = −α∞`.
    pub impedance_z: Complex64,
    /// `(λ_j, term_j)` with `α∞ = Σ term_j`; empty for the direct path.
    pub mode_contributions: Vec<(f64, Complex64)>,
    /// Filled by sweeps; `None` for synthetic parameters.
    pub wavelength_nm: Option<f64>,
    pub solver_path: SolverPath,
}

impl ImpedanceResult {
    fn new(alpha_inf: Complex64, modes: Vec<(f64, Complex64)>, path: SolverPath) -> Self {
        Self {
            alpha_inf,
            impedance_z: -alpha_inf,
            mode_contributions: modes,
            wavelength_nm: None,
            solver_path: path,
        }
    }

    /// Index and eigenvalue of the largest modal term.
    pub fn dominant_mode(&self) -> Option<(usize, f64)> {
        self.mode_contributions
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.norm().total_cmp(&b.1 .1.norm()).then(b.0.cmp(&a.0)))
            .map(|(j, &(l, _))| (j, l))
    }
}

/// Couplings of one eigen-density to the right-hand side and the moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoupling {
    pub lambda: f64,
    /// `(φ_j, ν2)` in the energy inner product.
    pub energy: f64,
    /// `∮ φ_j y2 dσ`.
    pub moment: f64,
    /// `energy / (½ − λ_j)`, the moment obtained by integrating by parts.
    pub moment_by_parts: f64,
}

pub fn mode_couplings(spec: &SpectralDecomposition, boundary: &ParticleBoundary) -> Vec<ModeCoupling> {
    let nu2 = DVector::from_vec(boundary.nu2());
    let gnu = &spec.gram * nu2;
    let wy: Vec<f64> = boundary.nodes().iter().map(|n| n.weight * n.point.x2).collect();
    spec.eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let phi = spec.eigenvectors.column(j);
            let energy = phi.dot(&gnu);
            let moment = phi.iter().zip(&wy).map(|(a, b)| a * b).sum();
            ModeCoupling {
                lambda,
                energy,
                moment,
                moment_by_parts: energy / (0.5 - lambda),
            }
        })
        .collect()
}

/// Relative mismatch between the two moment evaluations of each mode.
///
/// Modes that do not couple to `ν2` (both values at round-off level) are
/// measured against `1e-8` of the largest moment instead of their own size.
pub fn identity_defects(couplings: &[ModeCoupling]) -> Vec<f64> {
    let largest = couplings.iter().map(|c| c.moment.abs()).fold(0.0, f64::max);
    couplings
        .iter()
        .map(|c| {
            let scale = c.moment.abs().max(c.moment_by_parts.abs()).max(1e-8 * largest);
            if scale == 0.0 {
                0.0
            } else {
                (c.moment - c.moment_by_parts).abs() / scale
            }
        })
        .collect()
}

/// Density `φ` solving `(z − K*)φ = ν2` by dense LU.
pub fn solve_density(ops: &PeriodicOperators, boundary: &ParticleBoundary, z: Complex64) -> Result<Vec<Complex64>> {
    let mut rhs: Vec<Complex64> = boundary.nu2().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    project_zero_mean(&ops.weights, &mut rhs);
    solve_shifted(ops, z, rhs)
}

/// Solve `(z − K*)x = rhs` on the full node space.
pub(crate) fn solve_shifted(ops: &PeriodicOperators, z: Complex64, rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = ops.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { z } else { C0 };
        d - ops.np[(i, j)]
    });
    let lu = m.lu();
    let scale = ops.np.amax().max(z.norm());
    let pivot_min = (0..n).map(|i| lu.u()[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    let singular = || Error::NearSingular {
        distance: distance_to_spectrum(ops, z),
    };
    if !(pivot_min > 1e-13 * scale) {
        return Err(singular());
    }
    let x = lu.solve(&DVector::from_vec(rhs)).ok_or_else(singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(x.iter().copied().collect())
}

/// Distance from `z` to the nearest eigenvalue of the discrete `K*`.
pub fn distance_to_spectrum(ops: &PeriodicOperators, z: Complex64) -> f64 {
    ops.np
        .complex_eigenvalues()
        .iter()
        .map(|l| (l - z).norm())
        .fold(f64::INFINITY, f64::min)
}

fn moment(boundary: &ParticleBoundary, phi: &[Complex64]) -> Complex64 {
    boundary
        .nodes()
        .iter()
        .zip(phi)
        .map(|(n, &p)| p * (n.weight * n.point.x2))
        .sum()
}

/// `α∞ = −∮ y2 (z − K*)⁻¹[ν2] dσ` by a direct solve.
pub fn alpha_inf_direct(ops: &PeriodicOperators, boundary: &ParticleBoundary, z: Complex64) -> Result<ImpedanceResult> {
    let phi = solve_density(ops, boundary, z)?;
    Ok(ImpedanceResult::new(-moment(boundary, &phi), Vec::new(), SolverPath::Direct))
}

/// `α∞ = −Σ_j (φ_j, ν2) ∮ y2 φ_j / (z − λ_j)` over all discrete modes.
pub fn alpha_inf_spectral(spec: &SpectralDecomposition, boundary: &ParticleBoundary, z: Complex64) -> ImpedanceResult {
    alpha_inf_from_couplings(&mode_couplings(spec, boundary), z)
}

/// Series evaluation with precomputed couplings (shared across a sweep).
pub fn alpha_inf_from_couplings(couplings: &[ModeCoupling], z: Complex64) -> ImpedanceResult {
    let modes: Vec<(f64, Complex64)> = couplings
        .iter()
        .map(|c| (c.lambda, -(c.energy * c.moment) / (z - c.lambda)))
        .collect();
    let alpha: Complex64 = modes.iter().map(|m| m.1).sum();
    ImpedanceResult::new(alpha, modes, SolverPath::Spectral)
}

/// Value of a field at a point, flagged when the point is within two node
/// spacings of the boundary where plain quadrature loses accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Complex64,
    pub near_boundary: bool,
}

/// The cell corrector `α = S⁺[φ]` for one boundary and spectral parameter.
#[derive(Debug, Clone)]
pub struct Corrector {
    boundary: ParticleBoundary,
    density: Vec<Complex64>,
    alpha_inf: Complex64,
}

impl Corrector {
    pub fn new(ops: &PeriodicOperators, boundary: &ParticleBoundary, z: Complex64) -> Result<Self> {
        let density = solve_density(ops, boundary, z)?;
        let alpha_inf = -moment(boundary, &density);
        Ok(Self {
            boundary: boundary.clone(),
            density,
            alpha_inf,
        })
    }

    pub fn density(&self) -> &[Complex64] {
        &self.density
    }

    pub fn alpha_inf(&self) -> Complex64 {
        self.alpha_inf
    }

    fn check_target(&self, target: CellPoint) -> Result<bool> {
        if !(target.x2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "corrector is defined for x2 >= 0, got {}",
                target.x2
            )));
        }
        let dist = self.boundary.node_distance(target);
        if dist < 1e-12 {
            return Err(Error::SingularPoint { tol: 1e-12 });
        }
        Ok(dist < 2.0 * self.boundary.max_spacing())
    }

    /// `α(target)`.
    pub fn eval(&self, target: CellPoint) -> Result<FieldSample> {
        let near_boundary = self.check_target(target)?;
        let value = if target.x2 == 0.0 {
            C0
        } else {
            self.boundary
                .nodes()
                .iter()
                .zip(&self.density)
                .map(|(n, &p)| p * (green::g_halfspace_raw(target, n.point) * n.weight))
                .sum()
        };
        Ok(FieldSample { value, near_boundary })
    }

    /// `α(target) − α∞`, evaluated without cancellation far above the particles.
    pub fn deviation(&self, target: CellPoint) -> Result<FieldSample> {
        let near_boundary = self.check_target(target)?;
        let value = self
            .boundary
            .nodes()
            .iter()
            .zip(&self.density)
            .map(|(n, &p)| {
                let y = n.point;
                // G⁺ + y2 = decaying part + max(0, y2 − x2)
                let k = green::g_halfspace_decaying(target, y) + (y.x2 - target.x2).max(0.0);
                p * (k * n.weight)
            })
            .sum();
        Ok(FieldSample { value, near_boundary })
    }
}

/// `α(target)` for a single point; see [`Corrector`] for repeated evaluation.
pub fn corrector_field(
    ops: &PeriodicOperators,
    boundary: &ParticleBoundary,
    z: Complex64,
    target: CellPoint,
) -> Result<FieldSample> {
    Corrector::new(ops, boundary, z)?.eval(target)
}

/// Least-squares fit of `log|f(x2)| = c − rate·x2`; returns `rate`.
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, v)| (x, v.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

/// Reflection coefficient of `u + δ z ∂u/∂x2 = 0` at `x2 = 0` for the plane
/// wave `e^{ik d·x}` with `d2 < 0`:
/// `R = −(1 + iδ z k d2) / (1 − iδ z k d2)`.
///
/// `|R| < 1` exactly when `Im z < 0`, i.e. when `Im α∞ > 0`.
pub fn reflection_coefficient(z: Complex64, k_m: f64, incidence: [f64; 2], delta: f64) -> Result<Complex64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if !(k_m > 0.0) {
        return Err(Error::InvalidArgument(format!("k_m must be positive, got {k_m}")));
    }
    let norm = incidence[0].hypot(incidence[1]);
    if (norm - 1.0).abs() > 1e-12 || !(incidence[1] < 0.0) {
        return Err(Error::InvalidArgument(
            "incidence must be a unit vector with d2 < 0".into(),
        ));
    }
    let a = Complex64::i() * z * (delta * k_m * incidence[1]);
    let den = Complex64::new(1.0, 0.0) - a;
    if den.norm() < 1e-12 {
        return Err(Error::PerfectAbsorption(den.norm()));
    }
    Ok(-(a + 1.0) / den)
}

/// Unit incidence direction at `angle_deg` from the downward normal.
pub fn incidence_direction(angle_deg: f64) -> [f64; 2] {
    let t = angle_deg * PI / 180.0;
    [t.sin(), -t.cos()]
}
