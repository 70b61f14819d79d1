//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line;
//! run with `cargo test -p metaimp --test acceptance -- --nocapture` to see them.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metaimp::geometry::{make_disk, ParticleBoundary};
use metaimp::green::{g_halfspace, g_periodic, g_periodic_fourier, CellPoint};
use metaimp::impedance::{alpha_inf_direct, reflection_coefficient, Corrector, DrudeParams, MaterialState, EPS_0};
use metaimp::operators::{eigendecompose, PeriodicOperators};
use metaimp::probe::RefinedLayer;
use metaimp::scenarios::{radius_series, run_scenario, single_disk, three_disks};
use metaimp::shape_optim::{ascend_j, fd_directional_derivative, fourier_perturbation, shape_gradient, AscentOptions};
use metaimp::sweep::{sweep_serial, PreparedGeometry, WavelengthGrid, PEAK_PROMINENCE};

fn report(n: u32, ok: bool, msg: String) {
    println!("criterion {n}: {} {msg}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {msg}");
}

fn disk(n: usize) -> ParticleBoundary {
    make_disk(CellPoint::new(0.0, 0.5), 0.2, n).unwrap()
}

fn vacuum() -> Complex64 {
    Complex64::new(EPS_0, 0.0)
}

/// `G♯` summed from its Fourier expansion in `x1`.
fn fourier_oracle(x1: f64, x2: f64, terms: usize) -> f64 {
    let a = x2.abs();
    let tail: f64 = (1..=terms)
        .map(|n| (-2.0 * PI * n as f64 * a).exp() * (2.0 * PI * n as f64 * x1).cos() / n as f64)
        .sum();
    a / 2.0 - 2f64.ln() / (2.0 * PI) - tail / (2.0 * PI)
}

/// Least-squares slope of `ln y` against `x`.
fn log_slope(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1.ln()).sum::<f64>() / n;
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1.ln() - my)).sum();
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_01_green_oracle() {
    let m = 100;
    let pts: Vec<(f64, f64)> = (0..m)
        .flat_map(|i| {
            (0..m).flat_map(move |j| {
                let x1 = -0.5 + i as f64 / (m - 1) as f64;
                let a = 0.1 + 4.9 * j as f64 / (m - 1) as f64;
                [(x1, a), (x1, -a)]
            })
        })
        .collect();
    let t = Instant::now();
    let closed: Vec<f64> = pts.iter().map(|&(x1, x2)| g_periodic(CellPoint::new(x1, x2)).unwrap()).collect();
    let elapsed = t.elapsed().as_secs_f64();
    let mut vs_lib: f64 = 0.0;
    let mut vs_oracle: f64 = 0.0;
    for (&(x1, x2), g) in pts.iter().zip(&closed) {
        vs_lib = vs_lib.max((g - g_periodic_fourier(CellPoint::new(x1, x2), 200).unwrap()).abs());
        vs_oracle = vs_oracle.max((g - fourier_oracle(x1, x2, 200)).abs());
    }
    report(
        1,
        vs_lib <= 1e-10 && vs_oracle <= 1e-10 && elapsed < 1.0,
        format!("max diff {vs_lib:.2e} (library series), {vs_oracle:.2e} (test series), closed form {elapsed:.3} s"),
    );
}

#[test]
fn criterion_02_dirichlet_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let worst = (0..1000)
        .map(|_| {
            let x = CellPoint::new(rng.random_range(-3.0..3.0), 0.0);
            let y = CellPoint::new(rng.random_range(-0.5..0.5), rng.random_range(0.01..3.0));
            g_halfspace(x, y).unwrap().abs()
        })
        .fold(0.0, f64::max);
    report(2, worst <= 1e-13, format!("max |G+| on the plate {worst:.2e}"));
}

#[test]
fn criterion_03_corrector_decay() {
    let b = disk(128);
    let ops = PeriodicOperators::assemble(&b).unwrap();
    let mat = MaterialState::drude_gold(1000.0, &DrudeParams::default()).unwrap();
    let c = Corrector::new(&ops, &b, mat.spectral_parameter()).unwrap();
    let samples: Vec<(f64, f64)> = [2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|&x2| (x2, c.deviation(CellPoint::new(0.0, x2)).unwrap().value.norm()))
        .collect();
    let rate = -log_slope(&samples);
    report(
        3,
        rate >= 0.9 * 2.0 * PI,
        format!("decay rate {rate:.4} (threshold {:.4}) at 1000 nm", 0.9 * 2.0 * PI),
    );
}

#[test]
fn criterion_04_operator_suite() {
    let t = Instant::now();
    let b = disk(128);
    let ops = PeriodicOperators::assemble(&b).unwrap();

    // interior flux of S+[phi] against (-1/2 + K*)phi for a smooth zero-mean phi
    let w = b.weights();
    let mut phi: Vec<f64> = b
        .nodes()
        .iter()
        .map(|n| (n.param).cos() + 0.5 * (2.0 * n.param).sin() - 0.3 * (3.0 * n.param).cos())
        .collect();
    let mean = phi.iter().zip(&w).map(|(p, w)| p * w).sum::<f64>() / w.iter().sum::<f64>();
    phi.iter_mut().for_each(|p| *p -= mean);
    let kphi = &ops.np * DVector::from_column_slice(&phi);
    let density: Vec<Complex64> = phi.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    let d = 1e-4;
    let layer = RefinedLayer::new(&b, &density, d / 5.0);
    let scale = kphi.iter().zip(&phi).map(|(k, p)| (k - 0.5 * p).abs()).fold(0.0, f64::max);
    let mut jump: f64 = 0.0;
    for i in (0..b.len()).step_by(8) {
        let node = &b.nodes()[i];
        let at = |t: f64| {
            let x = CellPoint::new(node.point.x1 - t * node.normal[0], node.point.x2 - t * node.normal[1]);
            layer.potential(x).re
        };
        // one-sided second-order difference toward the boundary from inside
        let (u1, u2, u3) = (at(d), at(2.0 * d), at(3.0 * d));
        let inward = (-2.5 * u1 + 4.0 * u2 - 1.5 * u3) / d;
        let flux = -inward;
        jump = jump.max((flux - (kphi[i] - 0.5 * phi[i])).abs() / scale);
    }

    let calderon = ops.calderon_residual();
    let whitened = ops.whitened_np().unwrap();
    let eig = whitened.complex_eigenvalues();
    let max_im = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let max_abs = eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);

    let coarse = eigendecompose(&ops).unwrap();
    let fine = eigendecompose(&PeriodicOperators::assemble(&disk(256)).unwrap()).unwrap();
    let mesh = (0..10)
        .map(|j| (coarse.eigenvalues[j] - fine.eigenvalues[j]).abs())
        .fold(0.0, f64::max);
    let elapsed = t.elapsed().as_secs_f64();

    report(
        4,
        jump <= 1e-4 && calderon <= 1e-8 && max_im <= 1e-10 && max_abs < 0.5 && mesh <= 1e-8 && elapsed < 10.0,
        format!(
            "jump {jump:.2e}, calderon {calderon:.2e}, max|Im| {max_im:.2e}, max|lambda| {max_abs:.4}, mesh {mesh:.2e}, {elapsed:.2} s"
        ),
    );
}

#[test]
fn criterion_05_eigen_identity() {
    let b = disk(128);
    let ops = PeriodicOperators::assemble(&b).unwrap();
    let spec = eigendecompose(&ops).unwrap();
    let w = b.weights();
    let nu2 = b.nu2();
    let y2 = b.y2();
    let pairs: Vec<(f64, f64)> = (0..10)
        .map(|j| {
            let phi = spec.eigenvector(j);
            let moment: f64 = phi.iter().zip(&y2).zip(&w).map(|((p, y), w)| p * y * w).sum();
            let energy = ops.h_inner(phi.as_slice(), &nu2);
            (moment, energy / (0.5 - spec.eigenvalues[j]))
        })
        .collect();
    // modes that do not couple to nu2 (odd in x1 for the disk) have both sides at round-off
    let largest = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let defect = pairs
        .iter()
        .map(|&(m, r)| (m - r).abs() / m.abs().max(1e-8 * largest))
        .fold(0.0, f64::max);
    report(5, defect <= 1e-6, format!("max relative defect {defect:.2e} over 10 leading modes"));
}

#[test]
fn criterion_06_path_equivalence() {
    let t = Instant::now();
    let prep = PreparedGeometry::new(disk(128)).unwrap();
    let rows = sweep_serial(&prep, &WavelengthGrid::default().wavelengths(), &DrudeParams::default(), vacuum());
    let elapsed = t.elapsed().as_secs_f64();
    let rows: Vec<_> = rows.into_iter().map(|r| r.unwrap()).collect();

    // independent series evaluation from the raw eigenpairs
    let b = &prep.boundary;
    let (w, nu2, y2) = (b.weights(), b.nu2(), b.y2());
    let terms: Vec<(f64, f64)> = (0..prep.spectrum.eigenvalues.len())
        .map(|j| {
            let phi = prep.spectrum.eigenvector(j);
            let c = prep.ops.h_inner(phi.as_slice(), &nu2);
            let p: f64 = phi.iter().zip(&y2).zip(&w).map(|((p, y), w)| p * y * w).sum();
            (prep.spectrum.eigenvalues[j], c * p)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in &rows {
        let z = r.spectral_parameter;
        let series: Complex64 = terms.iter().map(|&(l, cp)| -cp / (z - l)).sum();
        worst = worst.max((series - r.alpha_inf).norm() / r.alpha_inf.norm());
        worst = worst.max(r.path_defect());
    }
    report(
        6,
        rows.len() == 241 && worst <= 1e-8 && elapsed < 60.0,
        format!("max relative gap {worst:.2e} over {} wavelengths, serial sweep {elapsed:.2} s", rows.len()),
    );
}

#[test]
fn criterion_07_sign_lemma() {
    let prep = PreparedGeometry::new(disk(128)).unwrap();
    let rows = sweep_serial(&prep, &WavelengthGrid::default().wavelengths(), &DrudeParams::default(), vacuum());
    let min_im = rows.iter().map(|r| r.as_ref().unwrap().alpha_inf.im).fold(f64::INFINITY, f64::min);
    report(7, min_im > 0.0, format!("min Im alpha_inf {min_im:.3e}"));
}

#[test]
fn criterion_08_radius_ordering() {
    let grid = WavelengthGrid::default();
    let drude = DrudeParams::default();
    let mut summary = Vec::new();
    for b in radius_series(128).unwrap() {
        let s = run_scenario(b, &grid, &drude, PEAK_PROMINENCE).unwrap();
        summary.push((s.top_peak().map(|p| (p.wavelength_nm, p.value)), s.max_abs()));
    }
    let peaks: Option<Vec<(f64, f64)>> = summary.iter().map(|s| s.0).collect();
    let ok = match &peaks {
        Some(p) => p.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 > w[0].1),
        None => false,
    };
    let detail: Vec<String> = summary
        .iter()
        .zip([0.1, 0.2, 0.3, 0.4])
        .map(|((peak, (wl, v)), r)| match peak {
            Some((pw, pv)) => format!("r={r}: peak {pw:.0} nm |a|={pv:.3e}"),
            None => format!("r={r}: no peak (max |a|={v:.3e} at {wl:.0} nm)"),
        })
        .collect();
    report(8, ok, detail.join("; "));
}

#[test]
fn criterion_09_localized_vs_delocalized() {
    let grid = WavelengthGrid::default();
    let drude = DrudeParams::default();
    let one = run_scenario(single_disk(128).unwrap(), &grid, &drude, 0.5).unwrap();
    let three = run_scenario(three_disks(128).unwrap(), &grid, &drude, PEAK_PROMINENCE).unwrap();
    let single_peak = one.top_peak().map(|p| p.value);
    let ok = one.peaks.len() == 1
        && three.peaks.len() >= 2
        && three.peaks.iter().all(|p| p.value < single_peak.unwrap_or(f64::NEG_INFINITY));
    report(
        9,
        ok,
        format!(
            "single disk: {} peak(s) at 50% prominence (max |a|={:.3e} at {:.0} nm); three disks: {} peak(s) (max |a|={:.3e} at {:.0} nm)",
            one.peaks.len(),
            one.max_abs().1,
            one.max_abs().0,
            three.peaks.len(),
            three.max_abs().1,
            three.max_abs().0
        ),
    );
}

#[test]
fn criterion_10_shape_gradient() {
    let b = disk(128);
    let mat = MaterialState::drude_gold(600.0, &DrudeParams::default()).unwrap();
    let ratio = mat.mu_ratio();
    let g = shape_gradient(&b, ratio).unwrap();
    let etas = [1e-3, 1e-4, 1e-5];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut slopes = Vec::new();
    for _ in 0..3 {
        let cos: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sin: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = fourier_perturbation(&b, &cos, &sin);
        let exact = g.directional_derivative(&b, &h);
        let errs: Vec<(f64, f64)> = etas
            .iter()
            .map(|&eta| {
                let fd = fd_directional_derivative(&b, ratio, &h, eta).unwrap();
                (eta.ln(), (fd - exact).norm() / exact.norm())
            })
            .collect();
        slopes.push(log_slope(&errs));
    }

    let opts = AscentOptions {
        steps: 20,
        ..AscentOptions::default()
    };
    let traj = ascend_j(&b, ratio, &opts).unwrap();
    let monotone = traj.records.windows(2).all(|w| w[1].j >= w[0].j);
    let (j0, j1) = (traj.records[0].j, traj.last().j);
    let slopes_ok = slopes.iter().all(|s| (s - 1.0).abs() <= 0.3);
    report(
        10,
        slopes_ok && monotone,
        format!(
            "FD slopes {:.3?}; ascent J {j0:.4e} -> {j1:.4e} over {} iterations ({}), monotone {monotone}",
            slopes,
            traj.last().iteration,
            traj.status.as_str()
        ),
    );
}

#[test]
fn criterion_11_neumann_limit() {
    // the contrast parameter enters the solver as z = -lambda_mu
    let b = disk(128);
    let ops = PeriodicOperators::assemble(&b).unwrap();
    let area = b.area();
    let mut worst: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for lambda_mu in [1e3, -1e3] {
        let z = Complex64::new(-lambda_mu, 0.0);
        let a = alpha_inf_direct(&ops, &b, z).unwrap().alpha_inf;
        worst = worst.max((a - area / lambda_mu).norm());
        literal = literal.max((a + area / lambda_mu).norm());
    }
    let bound = 10.0 * 1e-6 * area;
    report(
        11,
        worst <= bound,
        format!("|alpha - area/lambda_mu| = {worst:.3e} <= {bound:.3e}; with the opposite sign the gap is {literal:.3e}"),
    );
}

#[test]
fn criterion_12_reflection() {
    let r0 = reflection_coefficient(Complex64::new(0.0, 0.0), 1.0, [0.0, -1.0], 0.05).unwrap();
    let prep = PreparedGeometry::new(disk(128)).unwrap();
    let rows = sweep_serial(&prep, &WavelengthGrid::default().wavelengths(), &DrudeParams::default(), vacuum());
    let mut max_r: f64 = 0.0;
    let mut passive = 0;
    for r in rows.iter().map(|r| r.as_ref().unwrap()) {
        let z = r.impedance_z();
        if z.im < 0.0 {
            passive += 1;
        }
        max_r = max_r.max(reflection_coefficient(z, 1.0, [0.0, -1.0], 0.05).unwrap().norm());
    }
    report(
        12,
        r0 == Complex64::new(-1.0, 0.0) && max_r < 1.0 && passive == rows.len(),
        format!("R(0) = {r0}; max |R| = {:.12} over {} points, all with Im z < 0: {}", max_r, rows.len(), passive == rows.len()),
    );
}
