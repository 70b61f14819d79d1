//! Self-check suite run by `metaimp verify`.
//!
//! Each check measures one property against a tolerance. Checks marked
//! resolution-sensitive are downgraded from failure to warning when the
//! node count is below [`MIN_RESOLVED_NODES`].

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{make_disk, ParticleBoundary};
use crate::green::{self, CellPoint};
use crate::impedance::{
    alpha_inf_direct, identity_defects, reflection_coefficient, fit_decay_rate, Corrector, DrudeParams, MaterialState, EPS_0,
};
use crate::operators::{eigendecompose, project_zero_mean, PeriodicOperators};
use crate::probe::{probe_traces, RefinedLayer};
use crate::shape_optim::{fd_directional_derivative, fourier_perturbation, shape_gradient};
use crate::sweep::{sweep_serial, PreparedGeometry, WavelengthGrid};

/// Below this node count resolution-sensitive misses are warnings.
pub const MIN_RESOLVED_NODES: usize = 64;

/// Half-space kernel under test; swapped out by mutation fixtures.
pub type HalfspaceKernel = fn(CellPoint, CellPoint) -> f64;

fn reference_kernel(x: CellPoint, y: CellPoint) -> f64 {
    green::g_halfspace(x, y).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Pass,
    Warn,
    Fail,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Pass => "PASS",
            Tier::Warn => "WARN",
            Tier::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub tier: Tier,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Nodes of the reference 0.2-disk.
    pub nodes: usize,
    /// Smaller grids and fewer samples.
    pub fast: bool,
    pub halfspace_kernel: HalfspaceKernel,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            nodes: 128,
            fast: false,
            halfspace_kernel: reference_kernel,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.tier != Tier::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<4} {:<22} measured {:>11.3e}  tolerance {:>9.2e}  {}",
                c.tier.as_str(),
                c.name,
                c.measured,
                c.tolerance,
                c.detail
            );
        }
        let count = |t| self.checks.iter().filter(|c| c.tier == t).count();
        let _ = writeln!(
            s,
            "{} passed, {} warnings, {} failed",
            count(Tier::Pass),
            count(Tier::Warn),
            count(Tier::Fail)
        );
        s
    }
}

enum Bound {
    /// Pass when `measured <= tol`.
    Max,
    /// Pass when `measured >= tol`.
    Min,
}

struct Ctx {
    nodes: usize,
    checks: Vec<CheckResult>,
}

impl Ctx {
    fn record(&mut self, name: &'static str, measured: f64, tol: f64, bound: Bound, sensitive: bool, detail: String) {
        let ok = match bound {
            Bound::Max => measured <= tol,
            Bound::Min => measured >= tol,
        };
        let tier = if ok {
            Tier::Pass
        } else if sensitive && self.nodes < MIN_RESOLVED_NODES {
            Tier::Warn
        } else {
            Tier::Fail
        };
        self.checks.push(CheckResult {
            name,
            measured,
            tolerance: tol,
            tier,
            detail,
        });
    }

    fn error(&mut self, name: &'static str, sensitive: bool, e: impl std::fmt::Display) {
        let tier = if sensitive && self.nodes < MIN_RESOLVED_NODES {
            Tier::Warn
        } else {
            Tier::Fail
        };
        self.checks.push(CheckResult {
            name,
            measured: f64::NAN,
            tolerance: f64::NAN,
            tier,
            detail: format!("error: {e}"),
        });
    }
}

/// Largest deviation of the closed form from the 200-term Fourier series
/// over an `m × m` grid with `|x2| ∈ [0.1, 5]`.
pub fn green_oracle_defect(m: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let x1 = -0.5 + i as f64 / (m - 1) as f64;
        for j in 0..m {
            let a = 0.1 + 4.9 * j as f64 / (m - 1) as f64;
            for x2 in [a, -a] {
                let p = CellPoint::new(x1, x2);
                let d = (green::g_periodic(p).unwrap() - green::g_periodic_fourier(p, 200).unwrap()).abs();
                worst = worst.max(d);
            }
        }
    }
    worst
}

/// Largest `|G⁺(x, y)|` for `x` on the plate over `count` random pairs.
pub fn dirichlet_trace_defect(kernel: HalfspaceKernel, count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = CellPoint::new(rng.random_range(-2.0..2.0), 0.0);
            let y = CellPoint::new(rng.random_range(-0.5..0.5), rng.random_range(0.01..2.0));
            kernel(x, y).abs()
        })
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

/// Random smooth zero-mean density (Fourier modes up to `modes` per component).
pub fn random_density(boundary: &ParticleBoundary, modes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..=modes)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut phi: Vec<f64> = boundary
        .nodes()
        .iter()
        .map(|n| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, &(a, b))| a * (m as f64 * n.param).cos() + b * (m as f64 * n.param).sin())
                .sum()
        })
        .collect();
    project_zero_mean(&boundary.weights(), &mut phi);
    phi
}

/// Relative mismatch between the interior normal derivative of `S⁺[φ]`
/// (probed off the boundary at distance `d`) and `(−½ + K*)φ`, over
/// `probes` nodes.
pub fn jump_relation_defect(ops: &PeriodicOperators, boundary: &ParticleBoundary, phi: &[f64], probes: usize, d: f64) -> f64 {
    let kphi = &ops.np * DVector::from_column_slice(phi);
    let rhs: Vec<f64> = kphi.iter().zip(phi).map(|(k, p)| k - 0.5 * p).collect();
    let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let density: Vec<Complex64> = phi.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let layer = RefinedLayer::new(boundary, &density, d / 5.0);
    let n = boundary.len();
    let stride = (n / probes.max(1)).max(1);
    (0..n)
        .step_by(stride)
        .map(|i| {
            let node = &boundary.nodes()[i];
            let (inner, _) = probe_traces(|x| layer.potential(x), node.point, node.normal, d);
            (inner.normal_derivative.re - rhs[i]).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Largest imaginary part among eigenvalues of the whitened (unsymmetrized)
/// operator.
pub fn spectrum_imaginary_part(ops: &PeriodicOperators) -> Result<f64> {
    let m = ops.whitened_np()?;
    Ok(m.complex_eigenvalues().iter().map(|z| z.im.abs()).fold(0.0, f64::max))
}

/// Slope of `log(error)` against `log(η)`.
pub fn loglog_slope(etas: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = etas.iter().zip(errors).map(|(e, r)| (e.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Run the full suite.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let mut ctx = Ctx {
        nodes: opts.nodes,
        checks: Vec::new(),
    };
    let fast = opts.fast;

    let m = if fast { 40 } else { 100 };
    let d = green_oracle_defect(m);
    ctx.record("green_oracle", d, 1e-10, Bound::Max, false, format!("{m}x{m} grid vs 200-term series"));

    let d = dirichlet_trace_defect(opts.halfspace_kernel, 1000, 11);
    ctx.record("dirichlet_trace", d, 1e-13, Bound::Max, false, "1000 random plate points".into());

    let center = CellPoint::new(0.0, 0.5);
    let boundary = match make_disk(center, 0.2, opts.nodes) {
        Ok(b) => b,
        Err(e) => {
            ctx.error("geometry", false, e);
            return VerifyReport { checks: ctx.checks };
        }
    };
    let ops = match PeriodicOperators::assemble(&boundary) {
        Ok(o) => o,
        Err(e) => {
            ctx.error("assembly", true, e);
            return VerifyReport { checks: ctx.checks };
        }
    };

    let phi = random_density(&boundary, (opts.nodes / 4).min(8), 5);
    let d = jump_relation_defect(&ops, &boundary, &phi, if fast { 8 } else { 16 }, 1e-4);
    ctx.record("jump_relation", d, 1e-4, Bound::Max, true, "interior flux probe at distance 1e-4".into());

    let r = ops.calderon_residual();
    ctx.record("calderon", r, 1e-8, Bound::Max, true, "||K^T G - G K|| / ||G||".into());

    match spectrum_imaginary_part(&ops) {
        Ok(im) => ctx.record("spectrum_real", im, 1e-10, Bound::Max, true, "max |Im| of whitened eigenvalues".into()),
        Err(e) => ctx.error("spectrum_real", true, e),
    }

    let spec = match eigendecompose(&ops) {
        Ok(s) => s,
        Err(e) => {
            ctx.error("eigendecompose", true, e);
            return VerifyReport { checks: ctx.checks };
        }
    };
    let first = spec.eigenvalues[0].abs();
    let last = spec.eigenvalues.last().unwrap().abs();
    ctx.record(
        "spectrum_bounds",
        first,
        0.5,
        Bound::Max,
        false,
        format!("max |lambda|; |lambda_last|/|lambda_first| = {:.2e}", last / first),
    );
    ctx.record("spectrum_decay", last / first, 0.1, Bound::Max, true, "|lambda_last| / |lambda_first|".into());

    let fine = make_disk(center, 0.2, 2 * opts.nodes)
        .and_then(|b| PeriodicOperators::assemble(&b))
        .and_then(|o| eigendecompose(&o));
    match fine {
        Ok(f) => {
            let d = (0..5)
                .map(|j| (f.eigenvalues[j] - spec.eigenvalues[j]).abs())
                .fold(0.0, f64::max);
            ctx.record(
                "mesh_independence",
                d,
                1e-8,
                Bound::Max,
                true,
                format!("leading 5 eigenvalues, n={} vs n={}", opts.nodes, 2 * opts.nodes),
            );
        }
        Err(e) => ctx.error("mesh_independence", true, e),
    }

    let prep = PreparedGeometry {
        boundary: boundary.clone(),
        ops: ops.clone(),
        couplings: crate::impedance::mode_couplings(&spec, &boundary),
        spectrum: spec,
    };
    let defects = identity_defects(&prep.couplings);
    let d = defects.iter().take(10).fold(0.0f64, |a, &b| a.max(b));
    ctx.record("eigen_identity", d, 1e-6, Bound::Max, true, "10 largest modes".into());

    let grid = WavelengthGrid {
        count: if fast { 61 } else { 241 },
        ..WavelengthGrid::default()
    };
    let drude = DrudeParams::default();
    let rows: Vec<_> = sweep_serial(&prep, &grid.wavelengths(), &drude, Complex64::new(EPS_0, 0.0));
    let failures = rows.iter().filter(|r| r.is_err()).count();
    let ok: Vec<_> = rows.into_iter().filter_map(|r| r.ok()).collect();
    if failures > 0 {
        ctx.error("sweep", false, format!("{failures} wavelengths failed"));
    }
    let d = ok.iter().map(|r| r.path_defect()).fold(0.0, f64::max);
    ctx.record("path_equivalence", d, 1e-8, Bound::Max, false, format!("{} wavelengths", ok.len()));
    let min_im = ok.iter().map(|r| r.alpha_inf.im).fold(f64::INFINITY, f64::min);
    ctx.record("sign_lemma", min_im, f64::MIN_POSITIVE, Bound::Min, false, "min Im alpha_inf over the sweep".into());

    let z = Complex64::new(1e3, 0.0);
    match alpha_inf_direct(&ops, &boundary, z) {
        Ok(r) => {
            let area = boundary.area();
            let d = (r.alpha_inf + area / z).norm() / area * z.norm_sqr();
            ctx.record("neumann_limit", d, 10.0, Bound::Max, false, "|alpha + area/z| |z|^2 / area at z = 1e3".into());
        }
        Err(e) => ctx.error("neumann_limit", false, e),
    }

    let mat = MaterialState::drude_gold(1000.0, &drude).expect("1000 nm is in range");
    match Corrector::new(&ops, &boundary, mat.spectral_parameter()) {
        Ok(c) => {
            let samples: Vec<(f64, f64)> = [2.0, 3.0, 4.0, 5.0]
                .iter()
                .map(|&x2| (x2, c.deviation(CellPoint::new(0.0, x2)).map(|s| s.value.norm()).unwrap_or(f64::NAN)))
                .collect();
            let rate = fit_decay_rate(&samples);
            ctx.record("decay_rate", rate, 0.9 * 2.0 * PI, Bound::Min, false, "fit over x2 in {2,3,4,5} at 1000 nm".into());
            let far = c.eval(CellPoint::new(0.0, 6.0)).map(|s| (s.value - c.alpha_inf()).norm()).unwrap_or(f64::NAN);
            ctx.record("far_field_constant", far, 1e-6, Bound::Max, false, "|alpha(0, 6) - alpha_inf|".into());
        }
        Err(e) => ctx.error("decay_rate", false, e),
    }

    let etas = [1e-3, 1e-4, 1e-5];
    let ratio = Complex64::new(1.0, 0.0) / Complex64::new(-2.0, 0.3);
    let shape_result = shape_gradient(&boundary, ratio).map(|g| {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let perts = if fast { 1 } else { 3 };
        (0..perts)
            .map(|_| {
                let cos: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let sin: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let h = fourier_perturbation(&boundary, &cos, &sin);
                let exact = g.directional_derivative(&boundary, &h);
                let errs: Vec<f64> = etas
                    .iter()
                    .map(|&eta| {
                        fd_directional_derivative(&boundary, ratio, &h, eta)
                            .map(|fd| (fd - exact).norm())
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                (loglog_slope(&etas, &errs) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    });
    match shape_result {
        Ok(dev) => ctx.record(
            "shape_gradient",
            dev,
            0.3,
            Bound::Max,
            true,
            "|log-log slope - 1| of FD error, eta in {1e-3,1e-4,1e-5}".into(),
        ),
        Err(e) => ctx.error("shape_gradient", true, e),
    }

    let r0 = reflection_coefficient(Complex64::new(0.0, 0.0), 1.0, [0.0, -1.0], 0.05).map(|r| (r + 1.0).norm());
    let margin = ok
        .iter()
        .map(|r| {
            reflection_coefficient(r.impedance_z(), 1.0, [0.0, -1.0], 0.05)
                .map(|v| 1.0 - v.norm())
                .unwrap_or(f64::NEG_INFINITY)
        })
        .fold(f64::INFINITY, f64::min);
    match r0 {
        Ok(d) => ctx.record("reflection_dirichlet", d, 0.0, Bound::Max, false, "|R(z=0) + 1|".into()),
        Err(e) => ctx.error("reflection_dirichlet", false, e),
    }
    ctx.record(
        "reflection_passive",
        margin,
        f64::MIN_POSITIVE,
        Bound::Min,
        false,
        "min 1 - |R| over the sweep, normal incidence, delta = 0.05".into(),
    );

    VerifyReport { checks: ctx.checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let etas = [1e-3, 1e-4, 1e-5];
        let errs: Vec<f64> = etas.iter().map(|e| 3.0 * e * e).collect();
        assert!((loglog_slope(&etas, &errs) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mutated_kernel_breaks_dirichlet_trace() {
        fn flipped(x: CellPoint, y: CellPoint) -> f64 {
            let d = x - y;
            green::g_periodic(d).unwrap() + green::g_periodic(CellPoint::new(d.x1, -x.x2 - y.x2)).unwrap()
        }
        assert!(dirichlet_trace_defect(reference_kernel, 200, 1) <= 1e-13);
        assert!(dirichlet_trace_defect(flipped, 200, 1) > 1e-3);
    }
}
