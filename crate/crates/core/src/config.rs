//! Run configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//!
//! [geometry]
//! nodes = 128                      # nodes per component (even, >= 8)
//!
//! [[geometry.particles]]
//! shape = "disk"                   # "disk" | "star" | "points"
//! center = [0.0, 0.5]
//! radius = 0.2
//!
//! [sweep]                          # optional; defaults shown
//! start_nm = 300.0
//! stop_nm = 1500.0
//! count = 241
//!
//! [material]                       # optional Drude overrides
//! plasma_ev = 9.02
//! damping_ev = 0.027
//! background = 1.0
//! eps_c = [1.0, 0.0]               # relative permittivity; inert
//!
//! [reflection]
//! delta_nm = 50.0                  # physical period of the particle layer
//! incidence_deg = 0.0
//!
//! [optimize]                       # used by `metaimp optimize`
//! wavelength_nm = 600.0
//! steps = 20
//! starts = 1                       # extra starts are seeded perturbations
//! seed = 7
//!
//! [output]
//! dir = "out"
//! svg = true
//! timestamp = true
//! dump_operators = false
//!
//! [run]
//! threads = 0                      # 0: all cores
//! ```
//!
//! Star particles take `base_radius`, `amplitude` and `lobes`; sampled
//! particles take `points = [[x1, x2], ...]` listed counter-clockwise.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{make_disk, make_multi, make_sampled, make_star, ParticleBoundary};
use crate::green::CellPoint;
use crate::impedance::{DrudeParams, EPS_0};
use crate::shape_optim::AscentOptions;
use crate::sweep::WavelengthGrid;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    geometry: RawGeometry,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    reflection: RawReflection,
    #[serde(default)]
    optimize: Option<RawOptimize>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(default = "default_nodes")]
    nodes: usize,
    particles: Vec<ParticleSpec>,
}

fn default_nodes() -> usize {
    128
}

/// One particle of the unit cell.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParticleSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Star {
        center: [f64; 2],
        base_radius: f64,
        amplitude: f64,
        lobes: u32,
    },
    Points {
        points: Vec<[f64; 2]>,
    },
}

impl ParticleSpec {
    pub fn build(&self, nodes: usize) -> Result<ParticleBoundary> {
        match self {
            ParticleSpec::Disk { center, radius } => make_disk(CellPoint::new(center[0], center[1]), *radius, nodes),
            ParticleSpec::Star {
                center,
                base_radius,
                amplitude,
                lobes,
            } => make_star(CellPoint::new(center[0], center[1]), *base_radius, *amplitude, *lobes, nodes),
            ParticleSpec::Points { points } => make_sampled(points.clone(), nodes),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSweep {
    start_nm: f64,
    stop_nm: f64,
    count: usize,
}

impl Default for RawSweep {
    fn default() -> Self {
        let g = WavelengthGrid::default();
        Self {
            start_nm: g.start_nm,
            stop_nm: g.stop_nm,
            count: g.count,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMaterial {
    plasma_ev: f64,
    damping_ev: f64,
    background: f64,
    eps_c: [f64; 2],
}

impl Default for RawMaterial {
    fn default() -> Self {
        let d = DrudeParams::default();
        Self {
            plasma_ev: d.plasma_ev,
            damping_ev: d.damping_ev,
            background: d.background,
            eps_c: [1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawReflection {
    delta_nm: f64,
    incidence_deg: f64,
}

impl Default for RawReflection {
    fn default() -> Self {
        Self {
            delta_nm: 50.0,
            incidence_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOptimize {
    wavelength_nm: f64,
    steps: usize,
    initial_step: f64,
    max_step: f64,
    min_step: f64,
    modes: usize,
    starts: usize,
    seed: u64,
    perturbation: f64,
}

impl Default for RawOptimize {
    fn default() -> Self {
        let a = AscentOptions::default();
        Self {
            wavelength_nm: 600.0,
            steps: a.steps,
            initial_step: a.initial_step,
            max_step: a.max_step,
            min_step: a.min_step,
            modes: a.modes,
            starts: 1,
            seed: 7,
            perturbation: 0.02,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    dir: PathBuf,
    svg: bool,
    timestamp: bool,
    dump_operators: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg: true,
            timestamp: true,
            dump_operators: false,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRun {
    threads: usize,
}

/// Material section of a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialConfig {
    pub drude: DrudeParams,
    /// Absolute `ε_c` in F/m.
    pub eps_c: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionConfig {
    pub delta_nm: f64,
    pub incidence_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub wavelength_nm: f64,
    pub ascent: AscentOptions,
    pub starts: usize,
    pub seed: u64,
    /// Amplitude of the random Fourier perturbation of extra starts.
    pub perturbation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
    pub timestamp: bool,
    pub dump_operators: bool,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub nodes: usize,
    pub particles: Vec<ParticleSpec>,
    pub grid: WavelengthGrid,
    pub material: MaterialConfig,
    pub reflection: ReflectionConfig,
    pub optimize: OptimizeConfig,
    pub output: OutputConfig,
    pub threads: usize,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            Error::config("<document>", format!("{}{}", e.message(), span))
        })?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        if raw.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", raw.schema_version),
            ));
        }
        let nodes = raw.geometry.nodes;
        if nodes < 8 || nodes % 2 != 0 {
            return Err(Error::config("geometry.nodes", format!("must be even and >= 8, got {nodes}")));
        }
        if raw.geometry.particles.is_empty() {
            return Err(Error::config("geometry.particles", "at least one particle is required"));
        }
        let grid = WavelengthGrid {
            start_nm: raw.sweep.start_nm,
            stop_nm: raw.sweep.stop_nm,
            count: raw.sweep.count,
        };
        grid.validate()?;
        let m = raw.material;
        positive("material.plasma_ev", m.plasma_ev)?;
        if !(m.damping_ev >= 0.0) {
            return Err(Error::config("material.damping_ev", "must be non-negative"));
        }
        positive("material.background", m.background)?;
        let material = MaterialConfig {
            drude: DrudeParams {
                plasma_ev: m.plasma_ev,
                damping_ev: m.damping_ev,
                background: m.background,
            },
            eps_c: Complex64::new(m.eps_c[0], m.eps_c[1]) * EPS_0,
        };
        positive("reflection.delta_nm", raw.reflection.delta_nm)?;
        if !(raw.reflection.incidence_deg.abs() < 90.0) {
            return Err(Error::config("reflection.incidence_deg", "must lie in (-90, 90)"));
        }
        let o = raw.optimize.unwrap_or_default();
        positive("optimize.wavelength_nm", o.wavelength_nm)?;
        positive("optimize.initial_step", o.initial_step)?;
        positive("optimize.max_step", o.max_step)?;
        positive("optimize.min_step", o.min_step)?;
        if o.starts == 0 {
            return Err(Error::config("optimize.starts", "must be at least 1"));
        }
        if !(o.perturbation >= 0.0) {
            return Err(Error::config("optimize.perturbation", "must be non-negative"));
        }
        let cfg = Self {
            nodes,
            particles: raw.geometry.particles,
            grid,
            material,
            reflection: ReflectionConfig {
                delta_nm: raw.reflection.delta_nm,
                incidence_deg: raw.reflection.incidence_deg,
            },
            optimize: OptimizeConfig {
                wavelength_nm: o.wavelength_nm,
                ascent: AscentOptions {
                    steps: o.steps,
                    initial_step: o.initial_step,
                    max_step: o.max_step,
                    min_step: o.min_step,
                    modes: o.modes,
                    ..AscentOptions::default()
                },
                starts: o.starts,
                seed: o.seed,
                perturbation: o.perturbation,
            },
            output: OutputConfig {
                dir: raw.output.dir,
                svg: raw.output.svg,
                timestamp: raw.output.timestamp,
                dump_operators: raw.output.dump_operators,
            },
            threads: raw.run.threads,
        };
        cfg.boundary()?;
        Ok(cfg)
    }

    /// Build and validate the particle boundary.
    pub fn boundary(&self) -> Result<ParticleBoundary> {
        let parts = self
            .particles
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.build(self.nodes)
                    .map_err(|e| Error::config(format!("geometry.particles[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.len() == 1 {
            Ok(parts.into_iter().next().unwrap())
        } else {
            make_multi(parts).map_err(|e| Error::config("geometry.particles", e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[[geometry.particles]]
shape = "disk"
center = [0.0, 0.5]
radius = 0.2
"#;

    #[test]
    fn defaults_fill_in() {
        let c = SweepConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.nodes, 128);
        assert_eq!(c.grid, WavelengthGrid::default());
        assert_eq!(c.material.drude, DrudeParams::default());
        assert_eq!(c.threads, 0);
        assert!(c.output.svg && c.output.timestamp && !c.output.dump_operators);
        assert_eq!(c.boundary().unwrap().len(), 128);
    }

    #[test]
    fn field_level_errors() {
        let bad_version = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(SweepConfig::from_toml_str(&bad_version), Err(Error::Config { field, .. }) if field == "schema_version"));
        let bad_grid = format!("{MINIMAL}\n[sweep]\nstart_nm = 900.0\nstop_nm = 400.0\n");
        assert!(SweepConfig::from_toml_str(&bad_grid).unwrap_err().is_validation());
        let outside = MINIMAL.replace("radius = 0.2", "radius = 0.6");
        match SweepConfig::from_toml_str(&outside) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "geometry.particles[0]"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{MINIMAL}\n[sweep]\nstrat_nm = 300.0\n");
        assert!(SweepConfig::from_toml_str(&unknown).is_err());
        let odd = MINIMAL.replace("schema_version = 1", "schema_version = 1\n[geometry]\nnodes = 33");
        assert!(SweepConfig::from_toml_str(&odd).is_err());
    }

    #[test]
    fn multi_particle_and_star() {
        let text = r#"
schema_version = 1
[geometry]
nodes = 64
[[geometry.particles]]
shape = "star"
center = [-0.25, 0.4]
base_radius = 0.1
amplitude = 0.02
lobes = 3
[[geometry.particles]]
shape = "disk"
center = [0.25, 0.4]
radius = 0.08
"#;
        let c = SweepConfig::from_toml_str(text).unwrap();
        let b = c.boundary().unwrap();
        assert_eq!(b.n_components(), 2);
        assert_eq!(b.len(), 128);
    }
}
