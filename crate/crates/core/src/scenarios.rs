//! Reference geometries for the qualitative resonance studies and a helper
//! that sweeps one of them and summarizes its peaks.

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::{make_disk, make_multi, ParticleBoundary};
use crate::green::CellPoint;
use crate::impedance::{DrudeParams, EPS_0};
use crate::sweep::{sweep, sweep_peaks, Peak, PreparedGeometry, SweepRow, WavelengthGrid};

pub const RADII: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
pub const HEIGHTS: [f64; 2] = [0.25, 0.45];

/// Disks of radius 0.1 to 0.4 centred at (0, 0.5).
pub fn radius_series(nodes: usize) -> Result<Vec<ParticleBoundary>> {
    RADII
        .iter()
        .map(|&r| make_disk(CellPoint::new(0.0, 0.5), r, nodes))
        .collect()
}

/// 0.2-disks centred at heights 0.25 and 0.45.
pub fn height_pair(nodes: usize) -> Result<Vec<ParticleBoundary>> {
    HEIGHTS
        .iter()
        .map(|&h| make_disk(CellPoint::new(0.0, h), 0.2, nodes))
        .collect()
}

pub fn single_disk(nodes: usize) -> Result<ParticleBoundary> {
    make_disk(CellPoint::new(0.0, 0.5), 0.2, nodes)
}

/// Three 0.08-disks at x1 = −0.3, 0, 0.3 and height 0.5.
pub fn three_disks(nodes: usize) -> Result<ParticleBoundary> {
    let parts = [-0.3, 0.0, 0.3]
        .iter()
        .map(|&x| make_disk(CellPoint::new(x, 0.5), 0.08, nodes))
        .collect::<Result<Vec<_>>>()?;
    make_multi(parts)
}

#[derive(Debug, Clone)]
pub struct ScenarioSweep {
    pub rows: Vec<SweepRow>,
    pub peaks: Vec<Peak>,
    pub failures: usize,
}

impl ScenarioSweep {
    /// Largest `|α∞|` and its wavelength.
    pub fn max_abs(&self) -> (f64, f64) {
        self.rows
            .iter()
            .map(|r| (r.wavelength_nm, r.alpha_inf.norm()))
            .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    /// Highest detected peak.
    pub fn top_peak(&self) -> Option<&Peak> {
        self.peaks.iter().max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

/// Sweep `boundary` with vacuum surroundings and report peaks with
/// prominence at least `min_fraction` of the maximum.
pub fn run_scenario(
    boundary: ParticleBoundary,
    grid: &WavelengthGrid,
    drude: &DrudeParams,
    min_fraction: f64,
) -> Result<ScenarioSweep> {
    let prep = PreparedGeometry::new(boundary)?;
    let points = sweep(&prep, &grid.wavelengths(), drude, Complex64::new(EPS_0, 0.0));
    let failures = points.iter().filter(|p| p.is_err()).count();
    let rows: Vec<SweepRow> = points.into_iter().filter_map(|p| p.ok()).collect();
    let peaks = sweep_peaks(&rows, min_fraction);
    Ok(ScenarioSweep { rows, peaks, failures })
}
