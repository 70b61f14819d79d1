//! Batch drivers behind the `sweep` and `optimize` subcommands.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::error::{Error, Result};
use crate::geometry::{NormalPerturbation, ParticleBoundary};
use crate::impedance::{incidence_direction, reflection_coefficient, MaterialState};
use crate::output::{boundary_plot, line_plot, reflection_csv, sweep_csv, trajectory_csv, write_file, Series};
use crate::shape_optim::{ascend_j, fourier_perturbation, AscentTrajectory};
use crate::sweep::{sweep, sweep_peaks, Peak, PreparedGeometry, SweepPoint, PEAK_PROMINENCE};

/// Run `f` on a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub peaks: Vec<Peak>,
    pub files: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.is_err()).count()
    }
}

/// Sweep the configured geometry and write `sweep.csv`, `reflection.csv`
/// and (optionally) `sweep.svg`, `geometry.svg` and operator dumps into
/// `cfg.output.dir`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    let boundary = cfg.boundary()?;
    let prep = PreparedGeometry::new(boundary)?;
    let wavelengths = cfg.grid.wavelengths();
    let points = sweep(&prep, &wavelengths, &cfg.material.drude, cfg.material.eps_c);
    let rows: Vec<_> = points.iter().filter_map(|p| p.as_ref().ok().cloned()).collect();
    let peaks = sweep_peaks(&rows, PEAK_PROMINENCE);
    for (wl, e) in points.iter().filter_map(|p| p.as_ref().err()) {
        log::warn!("{wl} nm: {e}");
    }

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &text)?;
        files.push(path);
        Ok(())
    };
    emit("sweep.csv", sweep_csv(&points, &peaks, cfg.output.timestamp))?;

    let direction = incidence_direction(cfg.reflection.incidence_deg);
    let refl: Vec<(f64, Option<Complex64>)> = points
        .iter()
        .map(|p| match p {
            Ok(r) => {
                let k = 2.0 * PI / r.wavelength_nm;
                let value = reflection_coefficient(r.impedance_z(), k, direction, cfg.reflection.delta_nm);
                if let Err(e) = &value {
                    log::warn!("{} nm reflection: {e}", r.wavelength_nm);
                }
                (r.wavelength_nm, value.ok())
            }
            Err((wl, _)) => (*wl, None),
        })
        .collect();
    emit("reflection.csv", reflection_csv(&refl, cfg.output.timestamp))?;

    if cfg.output.svg {
        let series = vec![
            Series {
                label: "|alpha_inf|".into(),
                points: rows.iter().map(|r| (r.wavelength_nm, r.alpha_inf.norm())).collect(),
            },
            Series {
                label: "Im alpha_inf".into(),
                points: rows.iter().map(|r| (r.wavelength_nm, r.alpha_inf.im)).collect(),
            },
        ];
        emit("sweep.svg", line_plot("Effective impedance", "wavelength (nm)", "alpha_inf", &series))?;
        emit("geometry.svg", boundary_plot("Geometry", &[("particles", &prep.boundary)]))?;
    }
    if cfg.output.dump_operators {
        let ops_dir = dir.join("operators");
        prep.ops.dump_csv(&ops_dir)?;
        prep.spectrum.write_csv(&ops_dir.join("eigenvalues.csv"))?;
        for name in ["single_layer.csv", "np.csv", "weights.csv", "eigenvalues.csv"] {
            files.push(ops_dir.join(name));
        }
    }
    Ok(SweepOutcome { points, peaks, files })
}

/// Random smooth normal displacement of `boundary` with sup-norm `amplitude`.
/// The amplitude is halved until the perturbed shape is admissible.
pub fn random_start(boundary: &ParticleBoundary, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<ParticleBoundary> {
    let cos: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sin: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut h = fourier_perturbation(boundary, &cos, &sin);
    let sup = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if sup > 0.0 {
        h.iter_mut().for_each(|v| *v /= sup);
    }
    let mut eta = amplitude;
    let mut last = None;
    for _ in 0..8 {
        match boundary.perturb(&NormalPerturbation { h: h.clone(), eta }) {
            Ok(b) => return Ok(b),
            Err(e) => last = Some(e),
        }
        eta *= 0.5;
    }
    Err(last.expect("loop ran"))
}

#[derive(Debug)]
pub struct OptimizeOutcome {
    pub trajectories: Vec<AscentTrajectory>,
    pub files: Vec<PathBuf>,
}

/// Multi-start ascent of `|α∞|²` at `cfg.optimize.wavelength_nm`. Start 0
/// is the configured geometry; start `k` perturbs it with a seeded random
/// Fourier displacement. Writes `trajectory_<k>.csv` and `shapes_<k>.svg`.
pub fn run_optimize(cfg: &SweepConfig) -> Result<OptimizeOutcome> {
    let opt = &cfg.optimize;
    let mat = MaterialState::drude(opt.wavelength_nm, &cfg.material.drude, cfg.material.eps_c)?;
    let ratio = mat.mu_ratio();
    let base = cfg.boundary()?;
    let starts: Vec<ParticleBoundary> = (0..opt.starts)
        .map(|k| {
            if k == 0 {
                Ok(base.clone())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opt.seed.wrapping_add(k as u64));
                random_start(&base, opt.perturbation, &mut rng)
            }
        })
        .collect::<Result<_>>()?;
    let trajectories = starts
        .par_iter()
        .map(|b| ascend_j(b, ratio, &opt.ascent))
        .collect::<Result<Vec<_>>>()?;

    let dir: &Path = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (k, t) in trajectories.iter().enumerate() {
        let path = dir.join(format!("trajectory_{k}.csv"));
        write_file(&path, &trajectory_csv(t, cfg.output.timestamp))?;
        files.push(path);
        if cfg.output.svg {
            let path = dir.join(format!("shapes_{k}.svg"));
            let svg = boundary_plot(
                &format!("Start {k}: {}", t.status.as_str()),
                &[("initial", &t.records[0].boundary), ("final", &t.last().boundary)],
            );
            write_file(&path, &svg)?;
            files.push(path);
        }
    }
    Ok(OptimizeOutcome { trajectories, files })
}
